#include "gatetrain/csv.hpp"

#include <cmath>
#include <cstdio>
#include <exception>

#include "gatetrain/errors.hpp"

namespace gatetrain {

std::string format_real(double value) {
  if (std::isnan(value)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string format_optional(const std::optional<std::size_t>& value) {
  return value ? std::to_string(*value) : "unreached";
}

std::string format_optional(const std::optional<double>& value) {
  return value ? format_real(*value) : "unreached";
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::vector<std::string> header)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc), width_(header.size()) {
  if (!out_) throw IoError("cannot write " + path.string());
  write(header);
}

void CsvWriter::write(const std::vector<std::string>& fields) {
  if (fields.size() != width_) {
    throw InternalError(path_.string() + ": row has " + std::to_string(fields.size()) +
                        " fields, header has " + std::to_string(width_));
  }
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    const auto& f = fields[i];
    if (f.find_first_of(",\"\n") != std::string::npos) {
      out_ << '"';
      for (char c : f) {
        if (c == '"') out_ << '"';
        out_ << c;
      }
      out_ << '"';
    } else {
      out_ << f;
    }
  }
  out_ << '\n';
  if (!out_) throw IoError("write failed: " + path_.string());
}

CsvWriter::Row& CsvWriter::Row::operator<<(std::string_view s) {
  fields_.emplace_back(s);
  return *this;
}

CsvWriter::Row::~Row() noexcept(false) {
  if (std::uncaught_exceptions() == 0) owner_.write(fields_);
}

}  // namespace gatetrain
