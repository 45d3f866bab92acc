#include <charconv>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

#include "pdtr/data.hpp"
#include "pdtr/error.hpp"

namespace pdtr {
namespace {

struct StageColumns {
  std::vector<int> x;                      // covariate column indices in order
  int action = -1;
  std::vector<std::pair<int, int>> feas;   // (action code, column)
  int prop = -1;
};

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  for (std::string& f : out) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
    if (f.size() >= 2 && f.front() == '"' && f.back() == '"') f = f.substr(1, f.size() - 2);
  }
  return out;
}

double parse_number(const std::string& s, std::size_t row, const std::string& column) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (s.empty() || ec != std::errc() || ptr != last)
    throw DataError("parse error at row " + std::to_string(row) + ", column '" + column +
                    "': '" + s + "' is not a number");
  return v;
}

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

Dataset parse_csv(const std::string& text, const std::optional<CsvSchema>& expected) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty CSV input: header required");
  const std::vector<std::string> header = split_line(line);

  static const std::regex x_re(R"(x(\d+)_(\d+))");
  static const std::regex a_re(R"(a(\d+))");
  static const std::regex feas_re(R"(feas(\d+)_(\d+))");
  static const std::regex prop_re(R"(prop(\d+))");
  static const std::regex y_re(R"(y_(.+))");

  std::map<int, StageColumns> stages;
  std::map<int, int> x_order_check;
  std::vector<int> y_cols;
  std::vector<std::string> y_names;
  int id_col = -1;
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    const std::string& h = header[c];
    std::smatch m;
    if (h == "id") {
      id_col = c;
    } else if (std::regex_match(h, m, x_re)) {
      StageColumns& sc = stages[std::stoi(m[1])];
      const int j = std::stoi(m[2]);
      if (j != static_cast<int>(sc.x.size()) + 1)
        throw DataError("header: covariate column '" + h + "' out of order");
      sc.x.push_back(c);
    } else if (std::regex_match(h, m, a_re)) {
      stages[std::stoi(m[1])].action = c;
    } else if (std::regex_match(h, m, feas_re)) {
      stages[std::stoi(m[1])].feas.emplace_back(std::stoi(m[2]), c);
    } else if (std::regex_match(h, m, prop_re)) {
      stages[std::stoi(m[1])].prop = c;
    } else if (std::regex_match(h, m, y_re)) {
      y_cols.push_back(c);
      y_names.push_back(m[1]);
    } else {
      throw DataError("header: unrecognized column '" + h + "'");
    }
  }
  if (id_col < 0) throw DataError("header: missing 'id' column");
  if (stages.empty()) throw DataError("header: no stage columns");
  if (y_cols.empty()) throw DataError("header: no outcome columns y_*");
  int expect_k = 1;
  for (const auto& [k, sc] : stages) {
    if (k != expect_k++) throw DataError("header: stages must be numbered 1..K consecutively");
    if (sc.action < 0) throw DataError("header: missing action column a" + std::to_string(k));
  }

  // Read all rows first: without feasibility columns the action alphabet is
  // inferred from the largest observed code.
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    rows.push_back(split_line(line));
    if (rows.back().size() != header.size())
      throw DataError("parse error at row " + std::to_string(rows.size()) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(rows.back().size()));
  }

  std::vector<StageLayout> layout;
  for (const auto& [k, sc] : stages) {
    StageLayout sl;
    sl.covariate_dim = static_cast<int>(sc.x.size());
    if (!sc.feas.empty()) {
      int max_code = -1;
      for (const auto& [code, col] : sc.feas) max_code = std::max(max_code, code);
      sl.n_actions = max_code + 1;
    } else {
      int max_code = 1;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const double a = parse_number(rows[r][sc.action], r + 1, header[sc.action]);
        max_code = std::max(max_code, static_cast<int>(a));
      }
      sl.n_actions = max_code + 1;
    }
    layout.push_back(sl);
  }
  if (expected) {
    if (expected->layout.size() != layout.size() ||
        (expected->n_outcomes != 0 && expected->n_outcomes != static_cast<int>(y_cols.size())))
      throw DataError("header does not match the expected schema");
    for (std::size_t k = 0; k < layout.size(); ++k)
      if (expected->layout[k].covariate_dim != layout[k].covariate_dim)
        throw DataError("header: stage " + std::to_string(k + 1) +
                        " covariate count does not match the expected schema");
  }

  std::vector<Trajectory> trajectories;
  trajectories.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& f = rows[r];
    const std::size_t row = r + 1;
    Trajectory t;
    t.id = f[id_col];
    int k = 0;
    for (const auto& [stage_no, sc] : stages) {
      const StageLayout& sl = layout[k];
      Eigen::VectorXd x(sl.covariate_dim);
      for (int j = 0; j < sl.covariate_dim; ++j) x(j) = parse_number(f[sc.x[j]], row, header[sc.x[j]]);
      t.covariates.push_back(std::move(x));
      const double a = parse_number(f[sc.action], row, header[sc.action]);
      if (a != static_cast<int>(a))
        throw DataError("parse error at row " + std::to_string(row) + ", column '" +
                        header[sc.action] + "': action codes must be integers");
      t.actions.push_back(static_cast<int>(a));
      ActionMask mask(sl.n_actions, sc.feas.empty() ? 1 : 0);
      for (const auto& [code, col] : sc.feas) {
        const double v = parse_number(f[col], row, header[col]);
        if (v != 0.0 && v != 1.0)
          throw DataError("parse error at row " + std::to_string(row) + ", column '" +
                          header[col] + "': feasibility flags must be 0 or 1");
        mask[code] = static_cast<std::uint8_t>(v);
      }
      const auto n_feasible = std::count(mask.begin(), mask.end(), 1);
      if (t.actions.back() < 0 || t.actions.back() >= sl.n_actions || mask[t.actions.back()] == 0)
        throw DataError("row " + std::to_string(row) + " (id '" + t.id + "'): action " +
                        std::to_string(t.actions.back()) + " is not feasible at stage " +
                        std::to_string(stage_no));
      t.feasible.push_back(std::move(mask));
      t.propensities.push_back(sc.prop >= 0 ? parse_number(f[sc.prop], row, header[sc.prop])
                                            : 1.0 / static_cast<double>(n_feasible));
      ++k;
    }
    t.outcomes.resize(static_cast<Eigen::Index>(y_cols.size()));
    for (std::size_t l = 0; l < y_cols.size(); ++l) {
      const double y = parse_number(f[y_cols[l]], row, header[y_cols[l]]);
      if (!std::isfinite(y))
        throw DataError("validation error at row " + std::to_string(row) + ", column '" +
                        header[y_cols[l]] + "': outcome must be finite");
      t.outcomes(static_cast<Eigen::Index>(l)) = y;
    }
    trajectories.push_back(std::move(t));
  }
  return Dataset(std::move(layout), std::move(y_names), std::move(trajectories));
}

Dataset load_csv(const std::filesystem::path& path, const std::optional<CsvSchema>& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), expected);
}

std::string to_csv(const Dataset& data) {
  std::string out = "id";
  for (int k = 0; k < data.n_stages(); ++k) {
    const StageLayout& sl = data.layout()[k];
    const std::string s = std::to_string(k + 1);
    for (int j = 0; j < sl.covariate_dim; ++j) out += ",x" + s + "_" + std::to_string(j + 1);
    out += ",a" + s;
    for (int a = 0; a < sl.n_actions; ++a) out += ",feas" + s + "_" + std::to_string(a);
    out += ",prop" + s;
  }
  for (const std::string& name : data.outcome_names()) out += ",y_" + name;
  out += '\n';
  for (const Trajectory& t : data.trajectories()) {
    out += t.id;
    for (int k = 0; k < t.n_stages(); ++k) {
      for (Eigen::Index j = 0; j < t.covariates[k].size(); ++j) out += "," + format_number(t.covariates[k](j));
      out += "," + std::to_string(t.actions[k]);
      for (std::uint8_t f : t.feasible[k]) out += f ? ",1" : ",0";
      out += "," + format_number(t.propensities[k]);
    }
    for (Eigen::Index l = 0; l < t.outcomes.size(); ++l) out += "," + format_number(t.outcomes(l));
    out += '\n';
  }
  return out;
}

void write_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write '" + path.string() + "'");
  out << to_csv(data);
  if (!out) throw UsageError("write failed for '" + path.string() + "'");
}

}  // namespace pdtr
