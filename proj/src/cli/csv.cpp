#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "hencky/cli.hpp"

namespace hencky {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string quote(const std::string& cell) {
  if (cell.find_first_of(",\"\n\r") == std::string::npos) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void append_row(std::string& out, const std::vector<std::string>& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out += ',';
    out += quote(row[i]);
  }
  out += '\n';
}

}  // namespace

std::string to_csv(const Table& t) {
  std::string out;
  append_row(out, t.header);
  for (const auto& row : t.rows) {
    if (row.size() != t.header.size()) throw std::invalid_argument("to_csv: row width differs from header");
    append_row(out, row);
  }
  return out;
}

Table parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> row;
  std::string cell;
  bool quoted = false;
  bool pending = false;  // a record has started on the current line
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      pending = true;
    } else if (c == ',') {
      row.push_back(std::move(cell));
      cell.clear();
      pending = true;
    } else if (c == '\n') {
      row.push_back(std::move(cell));
      cell.clear();
      records.push_back(std::move(row));
      row.clear();
      pending = false;
    } else if (c != '\r') {
      cell += c;
      pending = true;
    }
  }
  if (quoted) throw std::invalid_argument("parse_csv: unterminated quoted cell");
  if (pending) {
    row.push_back(std::move(cell));
    records.push_back(std::move(row));
  }
  if (records.empty()) throw std::invalid_argument("parse_csv: missing header row");
  Table t;
  t.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != t.header.size()) {
      throw std::invalid_argument("parse_csv: row " + std::to_string(r) + " width differs from header");
    }
    t.rows.push_back(std::move(records[r]));
  }
  return t;
}

void write_text(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace hencky
