#include "rdme/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rdme {

void CsvTable::add_row(std::initializer_list<double> values) {
    if (values.size() != columns.size())
        throw std::runtime_error("csv: row width does not match header");
    rows.emplace_back(values);
}

void CsvTable::write(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("csv: cannot write " + path);
    out.precision(12);
    for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
        out << '\n';
    }
}

void ensure_directory(const std::string& path) {
    if (!path.empty()) std::filesystem::create_directories(path);
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("io: cannot write " + path);
    out << content;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("io: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_field_csv(const std::string& path, const Eigen::MatrixXd& vertices,
                     const Eigen::VectorXd& areas, const std::vector<std::string>& labels,
                     const std::vector<Eigen::VectorXd>& fields) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("io: cannot write " + path);
    out.precision(12);
    out << "cell,x";
    if (vertices.cols() > 1) out << ",y";
    out << ",area";
    for (const auto& label : labels) out << ',' << label;
    out << '\n';
    for (int j = 0; j < vertices.rows(); ++j) {
        out << j << ',' << vertices(j, 0);
        if (vertices.cols() > 1) out << ',' << vertices(j, 1);
        out << ',' << areas(j);
        for (const auto& f : fields) out << ',' << f(j);
        out << '\n';
    }
}

}  // namespace rdme
