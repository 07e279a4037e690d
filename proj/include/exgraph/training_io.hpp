#pragma once

#include <fstream>
#include <sstream>

#include "exgraph/optimizer.hpp"

namespace exgraph {

// Training-sample CSV: one sample per line,
//   x_plus,attach,pattern
// where attach is a semicolon-separated list of `index:weight` pairs and
// pattern a semicolon-separated list of indices with formed edges. Both
// lists may be empty. A leading `x_plus,attach,pattern` header is allowed.

inline void save_training_csv(const std::vector<TrainingSample>& samples,
                              const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "x_plus,attach,pattern\n";
  for (const auto& s : samples) {
    out << fmt_full(s.x_plus) << ',';
    bool first = true;
    for (Index i = 0; i < s.a_plus.size(); ++i)
      if (s.a_plus[i] != 0.0) {
        out << (first ? "" : ";") << i << ':' << fmt_full(s.a_plus[i]);
        first = false;
      }
    out << ',';
    first = true;
    for (Index i = 0; i < s.b_plus.size(); ++i)
      if (s.b_plus[i] != 0.0) {
        out << (first ? "" : ";") << i;
        first = false;
      }
    out << '\n';
  }
}

inline std::vector<TrainingSample> load_training_csv(const std::string& path,
                                                     Index n) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<TrainingSample> samples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("x_plus", 0) == 0) continue;
    std::istringstream fields(line);
    std::string x_field, attach_field, pattern_field;
    if (!std::getline(fields, x_field, ',') ||
        !std::getline(fields, attach_field, ','))
      throw ParseError("expected `x_plus,attach,pattern`", line_no);
    std::getline(fields, pattern_field, ',');
    TrainingSample s;
    try {
      s.x_plus = std::stod(x_field);
    } catch (const std::exception&) {
      throw ParseError("bad x_plus value", line_no);
    }
    s.a_plus = Vector::Zero(n);
    s.b_plus = Vector::Zero(n);
    auto each_token = [&](const std::string& csv, auto&& fn) {
      std::istringstream items(csv);
      std::string token;
      while (std::getline(items, token, ';'))
        if (!token.empty()) fn(token);
    };
    each_token(pattern_field, [&](const std::string& token) {
      long idx = std::stol(token);
      if (idx < 0 || idx >= n) throw ParseError("pattern index out of range", line_no);
      s.b_plus[idx] = 1.0;
    });
    each_token(attach_field, [&](const std::string& token) {
      auto colon = token.find(':');
      if (colon == std::string::npos)
        throw ParseError("expected index:weight", line_no);
      long idx = std::stol(token.substr(0, colon));
      if (idx < 0 || idx >= n) throw ParseError("attach index out of range", line_no);
      s.a_plus[idx] = std::stod(token.substr(colon + 1));
      s.b_plus[idx] = 1.0;  // a weighted edge implies a formed edge
    });
    s.validate(n);
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace exgraph
