#include "opo/csv.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "opo/version.hpp"

namespace opo {

CsvWriter::CsvWriter(const std::string& path, const ScenarioConfig& config) {
    file_ = std::fopen(path.c_str(), "wb");
    if (!file_) throw std::runtime_error("cannot open output file: " + path);
    std::fprintf(file_, "# %s %s\n", tool_name, tool_version);
    std::fprintf(file_, "# config_hash = 0x%016" PRIx64 "\n", config.hash());
    std::fprintf(file_, "# seed = %" PRIu64 "\n", config.seed);
    for (const auto& [k, v] : config.resolved_entries())
        if (k != "seed") std::fprintf(file_, "# %s = %s\n", k.c_str(), v.c_str());
}

CsvWriter::~CsvWriter() {
    if (file_) std::fclose(file_);
}

void CsvWriter::comment(const std::string& line) {
    std::fprintf(file_, "# %s\n", line.c_str());
}

void CsvWriter::columns(const std::vector<std::string>& names) {
    for (size_t i = 0; i < names.size(); ++i)
        std::fprintf(file_, "%s%s", i ? "," : "", names[i].c_str());
    std::fprintf(file_, "\n");
}

void CsvWriter::row(const std::vector<double>& values) {
    for (size_t i = 0; i < values.size(); ++i)
        std::fprintf(file_, "%s%.17g", i ? "," : "", values[i]);
    std::fprintf(file_, "\n");
}

const std::vector<double> CsvTable::column(const std::string& name) const {
    for (size_t c = 0; c < columns.size(); ++c) {
        if (columns[c] != name) continue;
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(r.at(c));
        return out;
    }
    throw std::runtime_error("csv: no such column: " + name);
}

bool CsvTable::has_column(const std::string& name) const {
    for (const auto& c : columns)
        if (c == name) return true;
    return false;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open csv file: " + path);

    CsvTable table;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!have_header) {
            table.columns = cells;
            have_header = true;
            continue;
        }
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) row.push_back(std::stod(c));
        if (row.size() != table.columns.size())
            throw std::runtime_error("csv: ragged row in " + path);
        table.rows.push_back(std::move(row));
    }
    if (!have_header) throw std::runtime_error("csv: missing header row in " + path);
    return table;
}

}  // namespace opo
