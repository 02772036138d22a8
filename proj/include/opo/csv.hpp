#pragma once

#include <map>
#include <string>
#include <vector>

#include "opo/config.hpp"

namespace opo {

// Artifact writer: '#' header block (tool version, config hash, seed, the
// fully resolved config), one mandatory column-name row, then data rows.
// All numbers print with %.17g so identical runs produce identical bytes.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const ScenarioConfig& config);
    ~CsvWriter();

    CsvWriter(const CsvWriter&) = delete;
    CsvWriter& operator=(const CsvWriter&) = delete;

    void comment(const std::string& line);
    void columns(const std::vector<std::string>& names);
    void row(const std::vector<double>& values);

private:
    FILE* file_;
};

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;  // row-major

    const std::vector<double> column(const std::string& name) const;
    bool has_column(const std::string& name) const;
};

// Reads a file written by CsvWriter (or any '#'-commented CSV with a header
// row of column names).
CsvTable read_csv(const std::string& path);

}  // namespace opo
