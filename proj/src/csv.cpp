#include "dsgd/csv.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace dsgd {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

std::string format_number(std::size_t x) { return std::to_string(x); }

std::string format_number(std::optional<double> x) { return x ? format_number(*x) : std::string(); }

CsvWriter::CsvWriter(const std::string& path, std::vector<std::string> header)
    : out_(path, std::ios::binary | std::ios::trunc), columns_(header.size()) {
  if (!out_) throw std::runtime_error("cannot open " + path + " for writing");
  if (header.empty()) throw std::invalid_argument("CsvWriter: empty header");
  row(header);
  rows_ = 0;
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  if (fields.size() != columns_) throw std::invalid_argument("CsvWriter: wrong field count");
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    out_ << fields[i];
  }
  out_ << '\n';
  out_.flush();
  ++rows_;
}

void CsvWriter::comment(const std::string& text) {
  out_ << "# " << text << '\n';
  out_.flush();
}

}  // namespace dsgd
