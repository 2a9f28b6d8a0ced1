#include "tcmum/lp/mps.hpp"

#include <cmath>
#include <cstdio>
#include <vector>

namespace tcmum::lp {
namespace {

std::string numbered(char prefix, int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%c%07d", prefix, i + 1);
  return buf;
}

// Shortest %g rendering that fits the 12-character numeric field.
std::string number(double v) {
  char buf[32];
  for (int digits = 12; digits > 0; --digits) {
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    if (std::string(buf).size() <= 12) return buf;
  }
  return buf;
}

std::string field(const std::string& s, std::size_t width) {
  std::string out = s;
  out.resize(std::max(width, s.size()), ' ');
  return out;
}

// Columns 5-12 name, 15-22 row, 25-36 value.
void entry(std::ostream& out, const std::string& col, const std::string& row,
           double value) {
  out << "    " << field(col, 8) << "  " << field(row, 8) << "  " << number(value)
      << "\n";
}

}  // namespace

void write_mps(const LinearProgram& model, std::ostream& out, const std::string& name) {
  out << "NAME          " << name << "\n";
  out << "ROWS\n";
  out << " N  OBJ\n";
  for (int i = 0; i < model.row_count(); ++i) {
    const char* sense = "L";
    if (model.row(i).sense == Sense::kGreaterEqual) sense = "G";
    if (model.row(i).sense == Sense::kEqual) sense = "E";
    out << " " << sense << "  " << numbered('R', i) << "\n";
  }

  std::vector<std::vector<std::pair<int, double>>> columns(model.variable_count());
  for (int i = 0; i < model.row_count(); ++i) {
    const auto& r = model.row(i);
    for (std::size_t k = 0; k < r.index.size(); ++k)
      columns[r.index[k]].emplace_back(i, r.value[k]);
  }
  out << "COLUMNS\n";
  for (int j = 0; j < model.variable_count(); ++j) {
    const auto col = numbered('C', j);
    if (model.variable(j).cost != 0.0) entry(out, col, "OBJ", model.variable(j).cost);
    for (const auto& [i, v] : columns[j]) entry(out, col, numbered('R', i), v);
  }

  out << "RHS\n";
  if (model.offset() != 0.0) entry(out, "RHS", "OBJ", -model.offset());
  for (int i = 0; i < model.row_count(); ++i)
    if (model.row(i).rhs != 0.0) entry(out, "RHS", numbered('R', i), model.row(i).rhs);

  out << "BOUNDS\n";
  for (int j = 0; j < model.variable_count(); ++j) {
    const auto& v = model.variable(j);
    const auto col = numbered('C', j);
    auto bound = [&](const char* kind, double value) {
      out << " " << kind << " BND       " << field(col, 8) << "  " << number(value) << "\n";
    };
    auto flag = [&](const char* kind) {
      out << " " << kind << " BND       " << col << "\n";
    };
    if (v.lower == v.upper) {
      bound("FX", v.lower);
      continue;
    }
    if (std::isinf(v.lower) && std::isinf(v.upper)) {
      flag("FR");
      continue;
    }
    if (std::isinf(v.lower)) flag("MI");
    else if (v.lower != 0.0) bound("LO", v.lower);
    if (std::isfinite(v.upper)) bound("UP", v.upper);
  }
  out << "ENDATA\n";
}

}  // namespace tcmum::lp
