#pragma once

// Minimal RFC-4180 CSV output with locale-independent number formatting.

#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace cocyclelab {

/// Shortest round-trip decimal form ('.' separator, no locale); "nan",
/// "inf" and "-inf" for non-finite values.
std::string format_double(double v);

class CsvWriter {
 public:
  CsvWriter(std::ostream& out, std::vector<std::string> header);

  /// Throws PreconditionError when the field count differs from the header.
  void row(const std::vector<std::string>& fields);
  std::size_t rows_written() const noexcept { return rows_; }

 private:
  void write_fields(const std::vector<std::string>& fields);

  std::ostream& out_;
  std::size_t columns_;
  std::size_t rows_ = 0;
};

/// Quotes a field when it contains a comma, quote, or line break.
std::string csv_escape(std::string_view field);

}  // namespace cocyclelab
