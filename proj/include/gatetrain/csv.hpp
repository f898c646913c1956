#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gatetrain {

/// 17 significant digits; NaN becomes an empty field.
std::string format_real(double value);

/// Absent values are written as "unreached".
std::string format_optional(const std::optional<std::size_t>& value);
std::string format_optional(const std::optional<double>& value);

/// Minimal CSV writer: fixed header, rows of pre-formatted fields.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> header);

  class Row {
   public:
    explicit Row(CsvWriter& owner) : owner_(owner) {}
    Row& operator<<(std::string_view s);
    Row& operator<<(const char* s) { return *this << std::string_view(s); }
    Row& operator<<(const std::string& s) { return *this << std::string_view(s); }
    Row& operator<<(double v) { return *this << format_real(v); }
    Row& operator<<(std::size_t v) { return *this << std::string_view(std::to_string(v)); }
    Row& operator<<(int v) { return *this << std::string_view(std::to_string(v)); }
    ~Row() noexcept(false);

   private:
    CsvWriter& owner_;
    std::vector<std::string> fields_;
  };

  Row row() { return Row(*this); }

 private:
  void write(const std::vector<std::string>& fields);

  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t width_;
};

}  // namespace gatetrain
