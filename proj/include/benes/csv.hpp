#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

namespace benes {

// Shortest decimal form that round-trips a double ('.' separator, locale independent).
std::string format_double(double x);
// Inverse of format_double, subnormals included; throws std::invalid_argument on trailing junk.
double parse_double(const std::string& s);

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

    void row(std::initializer_list<double> values);
    void row(const std::vector<std::string>& fields);

private:
    std::ofstream out_;
    std::filesystem::path path_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

}  // namespace benes
