#pragma once

#include <optional>
#include <string>
#include <vector>

namespace cclab {

/// Line-oriented "key = value" text with [sections] and '#' comments.
struct IniEntry {
  std::string key;
  std::string value;
  int line = 0;
  int value_column = 0;
};

struct IniSection {
  std::string name;
  int line = 0;
  std::vector<IniEntry> entries;

  const IniEntry* find(const std::string& key) const;
};

struct IniDocument {
  std::vector<IniSection> sections;  // sections[0] holds keys before any header

  static IniDocument parse(const std::string& text);
  static IniDocument load(const std::string& path);

  const IniSection* section(const std::string& name) const;
  const IniEntry* find(const std::string& section, const std::string& key) const;
};

// Typed accessors that raise ParseError carrying the entry's position.
double entry_double(const IniEntry& e);
long long entry_int(const IniEntry& e);
bool entry_bool(const IniEntry& e);
std::vector<double> entry_doubles(const IniEntry& e);
std::vector<std::string> split_list(const std::string& text, char sep = ',');
std::string trim(const std::string& s);

[[noreturn]] void parse_error_at(int line, int column, const std::string& what);

}  // namespace cclab
