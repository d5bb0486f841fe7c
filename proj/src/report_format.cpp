#include "petc/report_format.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace petc {

std::string csv_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) v = 0.0;  // drop the sign of -0
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 12);
    return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) { append(header); }

CsvWriter& CsvWriter::row(std::vector<std::string> fields) {
    if (fields.size() != columns_) throw std::logic_error("csv row has the wrong number of fields");
    append(fields);
    return *this;
}

void CsvWriter::append(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) text_ += ',';
        const auto& f = fields[i];
        if (f.find_first_of(",\"\n") != std::string::npos) {
            text_ += '"';
            for (char c : f) {
                if (c == '"') text_ += '"';
                text_ += c;
            }
            text_ += '"';
        } else {
            text_ += f;
        }
    }
    text_ += '\n';
}

}  // namespace petc
