#include "etct/smt_backend.hpp"

#include "etct/errors.hpp"

#include <unistd.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <sys/wait.h>
#include <vector>

namespace etct {

namespace {

std::string relation_symbol(Relation rel) {
  switch (rel) {
    case Relation::GT: return ">";
    case Relation::GE: return ">=";
    case Relation::EQ: return "=";
    case Relation::LE: return "<=";
    case Relation::LT: return "<";
  }
  return "=";
}

std::string var(int i) { return "x" + std::to_string(i); }

struct TempFile {
  std::string path;
  TempFile() {
    const char* dir = std::getenv("TMPDIR");
    std::string tmpl = std::string(dir && *dir ? dir : "/tmp") + "/etct-smt-XXXXXX";
    std::vector<char> buf(tmpl.begin(), tmpl.end());
    buf.push_back('\0');
    const int fd = mkstemp(buf.data());
    if (fd < 0) throw BackendError("cannot create temporary file for solver input");
    close(fd);
    path = buf.data();
  }
  ~TempFile() { std::remove(path.c_str()); }
};

// Parses "0.25", "0.25?", "(- 0.25?)", "(/ 1.0 4.0)".
bool parse_value(const std::string& text, double& out) {
  std::string t;
  for (char c : text) {
    if (c != '?') t.push_back(c);
  }
  std::istringstream is(t);
  std::string tok;
  std::vector<std::string> toks;
  while (is >> tok) {
    std::string cur;
    for (char c : tok) {
      if (c == '(' || c == ')') {
        if (!cur.empty()) toks.push_back(cur);
        cur.clear();
        toks.push_back(std::string(1, c));
      } else {
        cur.push_back(c);
      }
    }
    if (!cur.empty()) toks.push_back(cur);
  }
  size_t pos = 0;
  std::function<bool(double&)> expr = [&](double& v) -> bool {
    if (pos >= toks.size()) return false;
    if (toks[pos] != "(") {
      char* end = nullptr;
      v = std::strtod(toks[pos].c_str(), &end);
      if (end == toks[pos].c_str() || *end != '\0') return false;
      ++pos;
      return true;
    }
    ++pos;
    if (pos >= toks.size()) return false;
    const std::string op = toks[pos++];
    std::vector<double> args;
    while (pos < toks.size() && toks[pos] != ")") {
      double a = 0.0;
      if (!expr(a)) return false;
      args.push_back(a);
    }
    if (pos >= toks.size()) return false;
    ++pos;
    if (op == "-" && args.size() == 1) {
      v = -args[0];
    } else if (op == "-" && args.size() == 2) {
      v = args[0] - args[1];
    } else if (op == "/" && args.size() == 2) {
      v = args[0] / args[1];
    } else if (op == "+" && !args.empty()) {
      v = 0.0;
      for (double a : args) v += a;
    } else {
      return false;
    }
    return true;
  };
  return expr(out) && pos == toks.size();
}

// Extracts the value following "(xi " in a get-value answer.
bool find_value(const std::string& answer, int i, double& out) {
  const std::string key = "(" + var(i) + " ";
  const size_t at = answer.find(key);
  if (at == std::string::npos) return false;
  size_t p = at + key.size();
  int depth = 0;
  size_t start = p;
  for (; p < answer.size(); ++p) {
    const char c = answer[p];
    if (c == '(') {
      ++depth;
    } else if (c == ')') {
      if (depth == 0) break;
      --depth;
    }
  }
  return parse_value(answer.substr(start, p - start), out);
}

}  // namespace

std::string smt_decimal(double v) {
  if (!std::isfinite(v)) throw BackendError("non-finite coefficient in solver query");
  const double a = std::abs(v);
  std::string body;
  if (a == 0.0) {
    body = "0.0";
  } else {
    const int e = static_cast<int>(std::floor(std::log10(a)));
    const int digits = std::max(1, 16 - e);
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << a;
    body = os.str();
    // Trim trailing zeros but keep one digit after the point.
    while (body.size() > 2 && body.back() == '0' && body[body.size() - 2] != '.') body.pop_back();
  }
  if (v < 0.0) return "(- " + body + ")";
  return body;
}

std::string to_smtlib(const Region& r) {
  const int n = r.dim;
  std::ostringstream os;
  os << "(set-option :pp.decimal true)\n";
  os << "(set-logic QF_NRA)\n";
  for (int i = 0; i < n; ++i) os << "(declare-const " << var(i) << " Real)\n";
  os << "(assert (= (+";
  for (int i = 0; i < n; ++i) os << " (* " << var(i) << ' ' << var(i) << ')';
  if (n == 1) os << " 0.0";
  os << ") 1.0))\n";
  for (const auto& c : r.constraints) {
    os << "(assert (" << relation_symbol(c.rel) << " (+";
    int terms = 0;
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        const double coef = (i == j) ? c.N(i, i) : 2.0 * c.N(i, j);
        if (coef == 0.0) continue;
        os << " (* " << smt_decimal(coef) << ' ' << var(i) << ' ' << var(j) << ')';
        ++terms;
      }
    }
    if (terms < 2) os << " 0.0";
    if (terms == 0) os << " 0.0";
    os << ") 0.0))\n";
  }
  os << "(check-sat)\n";
  os << "(get-value (";
  for (int i = 0; i < n; ++i) os << (i ? " " : "") << var(i);
  os << "))\n(exit)\n";
  return os.str();
}

std::string default_smt_command() {
  const char* env = std::getenv("ETC_SMT_SOLVER_CMD");
  if (env && *env) return env;
  return "z3 -in -smt2";
}

FeasibilityVerdict smt_feasible(const Region& r, const FeasibilityBudget& budget) {
  TempFile file;
  {
    std::ofstream out(file.path);
    if (!out) throw BackendError("cannot write solver input");
    out << to_smtlib(r);
  }
  std::string cmd = budget.smt_command.empty() ? default_smt_command() : budget.smt_command;
  std::ostringstream full;
  if (budget.smt_timeout_s > 0.0) {
    full << "timeout " << std::max(1, static_cast<int>(std::ceil(budget.smt_timeout_s))) << ' ';
  }
  full << cmd << " < '" << file.path << "' 2>/dev/null";
  FILE* pipe = popen(full.str().c_str(), "r");
  if (!pipe) throw BackendError("cannot start solver: " + cmd);
  std::string answer;
  std::array<char, 4096> buf{};
  size_t got = 0;
  while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) answer.append(buf.data(), got);
  const int status = pclose(pipe);
  const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;

  FeasibilityVerdict v;
  v.engine = "smt";
  std::istringstream is(answer);
  std::string first;
  is >> first;
  if (first == "unsat") {
    v.status = FeasibilityStatus::Unsat;
    v.exact = true;
    return v;
  }
  if (first == "unknown" || code == 124) {
    v.status = FeasibilityStatus::Unknown;
    return v;
  }
  if (first != "sat") {
    throw BackendError("solver '" + cmd + "' gave no verdict (exit " + std::to_string(code) + ")");
  }
  v.status = FeasibilityStatus::Sat;
  v.exact = true;
  Vector x(r.dim);
  bool parsed = true;
  for (int i = 0; i < r.dim && parsed; ++i) parsed = find_value(answer, i, x(i));
  if (parsed && x.norm() > 0.0) v.witness = x.normalized();
  return v;
}

}  // namespace etct
