#ifndef DSGD_CSV_HPP
#define DSGD_CSV_HPP

#include <cstddef>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace dsgd {

/// 17 significant digits, enough to round-trip any double. NaN prints "nan".
std::string format_number(double x);
std::string format_number(std::size_t x);
/// Empty field for an absent value.
std::string format_number(std::optional<double> x);

/// Comma-separated file with a mandatory header and LF line endings. Rows are
/// flushed as written so a crashed run still leaves a readable prefix.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, std::vector<std::string> header);

  void row(const std::vector<std::string>& fields);
  void comment(const std::string& text);
  std::size_t rows_written() const { return rows_; }

 private:
  std::ofstream out_;
  std::size_t columns_;
  std::size_t rows_ = 0;
};

}  // namespace dsgd

#endif  // DSGD_CSV_HPP
