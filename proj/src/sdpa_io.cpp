/*
   Copyright 2026 momrev authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

        http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#include "momrev/sdpa_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "presolve.hpp"

namespace momrev {

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void emit_entry(std::ostringstream& os, int matno, int blkno, int i, int j,
                double v) {
  if (v == 0.0) return;
  os << matno << " " << blkno << " " << i + 1 << " " << j + 1 << " "
     << fmt17(v) << "\n";
}

}  // namespace

std::string write_sdpa(const ConicProblem& p) {
  const std::string err = p.check();
  if (!err.empty()) throw std::invalid_argument("write_sdpa: " + err);
  if (p.block_dims.empty())
    throw std::invalid_argument("write_sdpa: nothing to export");

  std::ostringstream os;
  const int nb = static_cast<int>(p.block_dims.size());

  const detail::LmiForm lf = detail::to_lmi(p);
  if (lf.ok && !lf.inconsistent) {
    const int mz = lf.mz();
    if (mz == 0)
      throw std::invalid_argument(
          "write_sdpa: the equalities pin every variable; nothing to export");
    os << "*momrev sdpa export: lmi form, min c'x with sum x_i F_i - F0 >= 0\n";
    if (!p.name.empty()) os << "*name " << p.name << "\n";
    if (lf.offset != 0.0) os << "*OFFSET " << fmt17(lf.offset) << "\n";
    os << mz << "\n" << nb << "\n";
    for (int k = 0; k < nb; ++k) os << (k ? " " : "") << p.block_dims[k];
    os << "\n";
    for (int j = 0; j < mz; ++j) os << (j ? " " : "") << fmt17(lf.c(j));
    os << "\n";
    for (int k = 0; k < nb; ++k) {
      const int n = p.block_dims[k];
      for (int r = 0; r < n; ++r)
        for (int c = r; c < n; ++c)
          emit_entry(os, 0, k + 1, r, c, -lf.F0[k](r, c));
      for (int j = 0; j < mz; ++j)
        for (int r = 0; r < n; ++r)
          for (int c = r; c < n; ++c)
            emit_entry(os, j + 1, k + 1, r, c,
                       lf.Fstack[k](static_cast<Eigen::Index>(j) * n + r, c));
    }
    return os.str();
  }

  if (p.num_scalars == 0) {
    // standard correspondence: the problem sits on the file's dual side,
    // max <F0, Y>, <F_i, Y> = c_i with F0 = -C, F_i = A_i, c_i = b_i;
    // the file's optimal value is the negative of this problem's.
    const int m = p.num_equalities();
    if (m == 0)
      throw std::invalid_argument("write_sdpa: no constraints to export");
    os << "*momrev sdpa export: primal form on the file's dual side; "
          "file value = -(problem value)\n";
    if (!p.name.empty()) os << "*name " << p.name << "\n";
    os << m << "\n" << nb << "\n";
    for (int k = 0; k < nb; ++k) os << (k ? " " : "") << p.block_dims[k];
    os << "\n";
    for (int i = 0; i < m; ++i) os << (i ? " " : "") << fmt17(p.eq_rhs[i]);
    os << "\n";
    // F0 = -C (symmetrized, upper triangle)
    std::vector<Eigen::MatrixXd> C(nb);
    for (int k = 0; k < nb; ++k)
      C[k] = Eigen::MatrixXd::Zero(p.block_dims[k], p.block_dims[k]);
    for (const auto& mc : p.objective.mat) {
      if (mc.row == mc.col)
        C[mc.block](mc.row, mc.col) += mc.value;
      else
        C[mc.block](mc.row, mc.col) += 0.5 * mc.value;
    }
    for (int k = 0; k < nb; ++k) {
      const int n = p.block_dims[k];
      for (int r = 0; r < n; ++r)
        for (int c = r; c < n; ++c) emit_entry(os, 0, k + 1, r, c, -C[k](r, c));
    }
    for (int i = 0; i < m; ++i) {
      std::vector<Eigen::MatrixXd> A(nb);
      for (int k = 0; k < nb; ++k)
        A[k] = Eigen::MatrixXd::Zero(p.block_dims[k], p.block_dims[k]);
      for (const auto& mc : p.eq_lhs[i].mat) {
        if (mc.row == mc.col)
          A[mc.block](mc.row, mc.col) += mc.value;
        else
          A[mc.block](mc.row, mc.col) += 0.5 * mc.value;
      }
      for (int k = 0; k < nb; ++k) {
        const int n = p.block_dims[k];
        for (int r = 0; r < n; ++r)
          for (int c = r; c < n; ++c)
            emit_entry(os, i + 1, k + 1, r, c, A[k](r, c));
      }
    }
    return os.str();
  }

  throw std::invalid_argument(
      "write_sdpa: free scalars without block-defining equalities cannot be "
      "expressed in SDPA form");
}

ConicProblem read_sdpa(const std::string& text) {
  // tokenize: comments end at newline; separators include , ( ) { }
  std::vector<std::string> tokens;
  double offset = 0.0;
  {
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
      if (!line.empty() && (line[0] == '*' || line[0] == '"')) {
        std::istringstream cs(line.substr(1));
        std::string word;
        cs >> word;
        if (word == "OFFSET") cs >> offset;
        continue;
      }
      for (char& ch : line)
        if (ch == ',' || ch == '(' || ch == ')' || ch == '{' || ch == '}')
          ch = ' ';
      std::istringstream ls(line);
      std::string tok;
      while (ls >> tok) tokens.push_back(tok);
    }
  }
  std::size_t pos = 0;
  auto next = [&]() -> std::string {
    if (pos >= tokens.size())
      throw std::invalid_argument("read_sdpa: unexpected end of input");
    return tokens[pos++];
  };

  const int mdim = std::stoi(next());
  const int nblock = std::stoi(next());
  if (mdim <= 0 || nblock <= 0)
    throw std::invalid_argument("read_sdpa: bad dimensions");
  std::vector<int> raw_sizes(nblock);
  for (int k = 0; k < nblock; ++k) raw_sizes[k] = std::stoi(next());

  ConicProblem p;
  p.num_scalars = mdim;
  // expand diagonal blocks into 1x1 blocks
  std::vector<int> block_base(nblock);
  for (int k = 0; k < nblock; ++k) {
    block_base[k] = static_cast<int>(p.block_dims.size());
    if (raw_sizes[k] >= 0) {
      p.block_dims.push_back(raw_sizes[k]);
    } else {
      for (int i = 0; i < -raw_sizes[k]; ++i) p.block_dims.push_back(1);
    }
  }

  p.objective.constant = offset;
  for (int j = 0; j < mdim; ++j)
    p.objective.scalar.push_back({j, std::stod(next())});

  // accumulate F matrices sparsely: map (block,row,col) -> per-mat coeffs
  struct Key {
    int b, r, c;
    bool operator<(const Key& o) const {
      return std::tie(b, r, c) < std::tie(o.b, o.r, o.c);
    }
  };
  std::map<Key, std::map<int, double>> entries;
  while (pos + 5 <= tokens.size()) {
    const int matno = std::stoi(next());
    const int blkno = std::stoi(next());
    int i = std::stoi(next()) - 1;
    int j = std::stoi(next()) - 1;
    const double v = std::stod(next());
    if (matno < 0 || matno > mdim)
      throw std::invalid_argument("read_sdpa: matno out of range");
    if (blkno < 1 || blkno > nblock)
      throw std::invalid_argument("read_sdpa: blkno out of range");
    int b, r, c;
    if (raw_sizes[blkno - 1] >= 0) {
      b = block_base[blkno - 1];
      if (i > j) std::swap(i, j);
      r = i;
      c = j;
      if (j >= raw_sizes[blkno - 1])
        throw std::invalid_argument("read_sdpa: entry outside block");
    } else {
      if (i != j)
        throw std::invalid_argument(
            "read_sdpa: off-diagonal entry in a diagonal block");
      if (i >= -raw_sizes[blkno - 1])
        throw std::invalid_argument("read_sdpa: entry outside block");
      b = block_base[blkno - 1] + i;
      r = 0;
      c = 0;
    }
    entries[{b, r, c}][matno] += v;
  }

  // links: X[b](r,c) - sum_i x_i F_i = -F0  for every upper-tri entry
  for (std::size_t b = 0; b < p.block_dims.size(); ++b) {
    const int n = p.block_dims[b];
    for (int r = 0; r < n; ++r)
      for (int c = r; c < n; ++c) {
        LinearExpr lhs;
        lhs.mat.push_back({static_cast<int>(b), r, c, 1.0});
        double rhs = 0.0;
        auto it = entries.find({static_cast<int>(b), r, c});
        if (it != entries.end()) {
          for (const auto& [matno, v] : it->second) {
            if (matno == 0)
              rhs = -v;
            else
              lhs.scalar.push_back({matno - 1, -v});
          }
        }
        p.add_equality(std::move(lhs), rhs);
      }
  }
  return p;
}

void write_sdpa_file(const ConicProblem& problem, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os)
    throw std::runtime_error("write_sdpa_file: cannot open " + path);
  os << write_sdpa(problem);
  if (!os)
    throw std::runtime_error("write_sdpa_file: write failed for " + path);
}

ConicProblem read_sdpa_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is)
    throw std::runtime_error("read_sdpa_file: cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  ConicProblem p = read_sdpa(ss.str());
  p.name = path;
  return p;
}

}  // namespace momrev
