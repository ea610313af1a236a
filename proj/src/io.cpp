#include "battkit/io.hpp"

#include <fstream>
#include <sstream>

namespace battkit {

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t fnv1a(const std::string& text) {
  return fnv1a(text.data(), text.size());
}

std::string provenance_line(std::uint64_t config_hash, std::uint64_t seed) {
  std::ostringstream ss;
  ss << kToolVersion << " config=" << std::hex << config_hash << std::dec
     << " seed=" << seed;
  return ss.str();
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write file: " + path);
  out << content;
}

void write_result_csv(const std::string& path,
                      const std::vector<std::string>& column_names,
                      const std::vector<const std::vector<double>*>& columns,
                      const std::string& provenance) {
  if (column_names.size() != columns.size() || columns.empty()) {
    throw InputError("result CSV: column spec mismatch");
  }
  const std::size_t rows = columns.front()->size();
  for (const auto* c : columns) {
    if (c->size() != rows) throw InputError("result CSV: ragged columns");
  }
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  if (!provenance.empty()) out << "# " << provenance << "\n";
  for (std::size_t j = 0; j < column_names.size(); ++j) {
    out << column_names[j] << (j + 1 < column_names.size() ? ',' : '\n');
  }
  out.precision(12);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < columns.size(); ++j) {
      out << (*columns[j])[i] << (j + 1 < columns.size() ? ',' : '\n');
    }
  }
}

}  // namespace battkit
