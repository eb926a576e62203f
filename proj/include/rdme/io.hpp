#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace rdme {

// CSV with a header row; every run also drops one JSON summary next to its
// tables (config echo, seeds, timings) so a directory is self-describing.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void add_row(std::initializer_list<double> values);
    void write(const std::string& path) const;
};

void ensure_directory(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

// Fields per cell as CSV: cell, x [, y], area, then one column per label.
void write_field_csv(const std::string& path, const Eigen::MatrixXd& vertices,
                     const Eigen::VectorXd& areas,
                     const std::vector<std::string>& labels,
                     const std::vector<Eigen::VectorXd>& fields);

}  // namespace rdme
