#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace petc {

/// 12 significant digits, '.' separator, no locale dependence.
std::string csv_number(double v);

/// Minimal CSV writer: header row, LF line endings, quoting when needed.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);

    CsvWriter& row(std::vector<std::string> fields);
    const std::string& str() const { return text_; }

private:
    void append(const std::vector<std::string>& fields);
    std::size_t columns_;
    std::string text_;
};

}  // namespace petc
