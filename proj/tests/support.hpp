#pragma once

#include <initializer_list>

#include <doctest.h>

#include "cclab/core.hpp"

inline cclab::Vec vec(std::initializer_list<double> v) {
  cclab::Vec x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double a : v) x[i++] = a;
  return x;
}

#define CHECK_ERROR_KIND(expr, k)              \
  do {                                         \
    bool thrown_ = false;                      \
    try {                                      \
      (void)(expr);                            \
    } catch (const cclab::Error& e) {          \
      thrown_ = true;                          \
      CHECK(e.kind() == cclab::ErrorKind::k);  \
    }                                          \
    CHECK_MESSAGE(thrown_, "expected " #k);    \
  } while (0)
