#include <iomanip>
#include <istream>
#include <ostream>
#include <string>

#include "wasnrate/sdp.hpp"

namespace wasn::sdp {

namespace {

std::string token(std::istream& is) {
  std::string t;
  if (!(is >> t)) throw InvalidConfig("unexpected end of SDP file");
  return t;
}

void expect(std::istream& is, const std::string& word) {
  const std::string t = token(is);
  if (t != word) throw InvalidConfig("SDP file: expected '" + word + "', found '" + t + "'");
}

double number(std::istream& is) {
  const std::string t = token(is);
  try {
    std::size_t used = 0;
    const double v = std::stod(t, &used);
    if (used != t.size()) throw InvalidConfig("SDP file: bad number '" + t + "'");
    return v;
  } catch (const std::logic_error&) {
    throw InvalidConfig("SDP file: bad number '" + t + "'");
  }
}

Eigen::Index index(std::istream& is) {
  const double v = number(is);
  if (v < 0 || v != static_cast<double>(static_cast<Eigen::Index>(v))) {
    throw InvalidConfig("SDP file: expected a nonnegative integer");
  }
  return static_cast<Eigen::Index>(v);
}

void write_vector(std::ostream& os, const char* name, const RVector& v) {
  os << name;
  for (Eigen::Index i = 0; i < v.size(); ++i) os << ' ' << v[i];
  os << '\n';
}

}  // namespace

void dump(const SDPProblem& problem, std::ostream& os) {
  problem.validate();
  const auto old_precision = os.precision(17);
  os << "wasnrate-sdp 1\n";
  os << "variables " << problem.n << '\n';
  os << "offset " << problem.objective_offset << '\n';
  write_vector(os, "objective", problem.objective);
  write_vector(os, "lower", problem.lower);
  write_vector(os, "upper", problem.upper);
  os << "blocks " << problem.blocks.size() << '\n';
  os << "sizes";
  for (const auto& b : problem.blocks) os << ' ' << b.size;
  os << '\n';

  std::size_t count = 0;
  for (const auto& b : problem.blocks) {
    for (Eigen::Index j = 0; j < b.size; ++j) {
      for (Eigen::Index i = 0; i <= j; ++i) count += b.constant(i, j) != 0.0 ? 1 : 0;
    }
    for (const auto& t : b.terms) count += t.entries.size();
  }
  os << "entries " << count << '\n';
  for (std::size_t k = 0; k < problem.blocks.size(); ++k) {
    const auto& b = problem.blocks[k];
    for (Eigen::Index j = 0; j < b.size; ++j) {
      for (Eigen::Index i = 0; i <= j; ++i) {
        if (b.constant(i, j) != 0.0) os << k << ' ' << i << ' ' << j << " 0 " << b.constant(i, j) << '\n';
      }
    }
    for (const auto& t : b.terms) {
      for (const auto& e : t.entries) {
        os << k << ' ' << e.row << ' ' << e.col << ' ' << t.variable + 1 << ' ' << e.value << '\n';
      }
    }
  }
  os.precision(old_precision);
}

SDPProblem load(std::istream& is) {
  expect(is, "wasnrate-sdp");
  expect(is, "1");
  expect(is, "variables");
  SDPProblem p(index(is));
  expect(is, "offset");
  p.objective_offset = number(is);
  expect(is, "objective");
  for (Eigen::Index i = 0; i < p.n; ++i) p.objective[i] = number(is);
  expect(is, "lower");
  for (Eigen::Index i = 0; i < p.n; ++i) p.lower[i] = number(is);
  expect(is, "upper");
  for (Eigen::Index i = 0; i < p.n; ++i) p.upper[i] = number(is);
  expect(is, "blocks");
  const Eigen::Index nb = index(is);
  expect(is, "sizes");
  for (Eigen::Index k = 0; k < nb; ++k) p.blocks.emplace_back(index(is));
  expect(is, "entries");
  const Eigen::Index count = index(is);
  for (Eigen::Index e = 0; e < count; ++e) {
    const Eigen::Index k = index(is);
    const Eigen::Index i = index(is);
    const Eigen::Index j = index(is);
    const Eigen::Index var = index(is);
    const double value = number(is);
    if (k >= nb) throw InvalidConfig("SDP file: block index out of range");
    if (var > p.n) throw InvalidConfig("SDP file: variable index out of range");
    auto& blk = p.blocks[static_cast<std::size_t>(k)];
    if (var == 0) {
      blk.add_constant(i, j, value);
    } else {
      blk.add(var - 1, i, j, value);
    }
  }
  p.validate();
  return p;
}

}  // namespace wasn::sdp
