#include "cclab/config.hpp"

#include <fstream>
#include <sstream>

#include "cclab/core.hpp"

namespace cclab {

void parse_error_at(int line, int column, const std::string& what) {
  fail(ErrorKind::ParseError,
       "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  if (!text.empty() && text.back() == sep) out.push_back("");
  return out;
}

const IniEntry* IniSection::find(const std::string& key) const {
  for (const auto& e : entries)
    if (e.key == key) return &e;
  return nullptr;
}

IniDocument IniDocument::parse(const std::string& text) {
  IniDocument doc;
  doc.sections.push_back({"", 0, {}});
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string body = hash == std::string::npos ? raw : raw.substr(0, hash);
    const std::string t = trim(body);
    if (t.empty()) continue;
    const int indent = static_cast<int>(body.find_first_not_of(" \t")) + 1;
    if (t.front() == '[') {
      if (t.back() != ']') parse_error_at(line, indent, "unterminated section header");
      const std::string name = trim(t.substr(1, t.size() - 2));
      if (name.empty()) parse_error_at(line, indent + 1, "empty section name");
      for (const auto& s : doc.sections)
        if (s.name == name) parse_error_at(line, indent + 1, "duplicate section [" + name + "]");
      doc.sections.push_back({name, line, {}});
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) parse_error_at(line, indent, "expected 'key = value'");
    IniEntry e;
    e.key = trim(body.substr(0, eq));
    if (e.key.empty()) parse_error_at(line, indent, "missing key before '='");
    const std::string rest = body.substr(eq + 1);
    const auto vstart = rest.find_first_not_of(" \t");
    e.value = trim(rest);
    e.line = line;
    e.value_column = static_cast<int>(eq + 2 + (vstart == std::string::npos ? 0 : vstart));
    auto& sec = doc.sections.back();
    if (sec.find(e.key)) parse_error_at(line, indent, "duplicate key '" + e.key + "'");
    sec.entries.push_back(std::move(e));
  }
  return doc;
}

IniDocument IniDocument::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorKind::Io, "cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return parse(ss.str());
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + std::string(e.what()).substr(std::string(to_string(e.kind())).size() + 2));
  }
}

const IniSection* IniDocument::section(const std::string& name) const {
  for (const auto& s : sections)
    if (s.name == name) return &s;
  return nullptr;
}

const IniEntry* IniDocument::find(const std::string& sec, const std::string& key) const {
  const IniSection* s = section(sec);
  return s ? s->find(key) : nullptr;
}

double entry_double(const IniEntry& e) {
  try {
    std::size_t used = 0;
    const double v = std::stod(e.value, &used);
    if (trim(e.value.substr(used)).empty()) return v;
  } catch (const std::exception&) {
  }
  parse_error_at(e.line, e.value_column, "'" + e.key + "' expects a number, got '" + e.value + "'");
}

long long entry_int(const IniEntry& e) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(e.value, &used);
    if (trim(e.value.substr(used)).empty()) return v;
  } catch (const std::exception&) {
  }
  parse_error_at(e.line, e.value_column, "'" + e.key + "' expects an integer, got '" + e.value + "'");
}

bool entry_bool(const IniEntry& e) {
  if (e.value == "true" || e.value == "yes" || e.value == "1") return true;
  if (e.value == "false" || e.value == "no" || e.value == "0") return false;
  parse_error_at(e.line, e.value_column, "'" + e.key + "' expects true/false");
}

std::vector<double> entry_doubles(const IniEntry& e) {
  std::vector<double> out;
  int col = e.value_column;
  for (const auto& item : split_list(e.value)) {
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (!trim(item.substr(used)).empty()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      parse_error_at(e.line, col, "'" + e.key + "' has a bad number '" + item + "'");
    }
    col += static_cast<int>(item.size()) + 1;
  }
  return out;
}

}  // namespace cclab
