#include "zonoref/specparse.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>

namespace zonoref {

namespace {

// ---------------------------------------------------------------------------
// S-expressions
// ---------------------------------------------------------------------------

struct Sexp {
  bool is_atom = false;
  std::string text;         // atoms only
  std::vector<Sexp> items;  // lists only
};

std::vector<std::string> sexp_tokens(const std::string& text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c == ';') {
      while (i < text.size() && text[i] != '\n') ++i;
    } else if (c == '(' || c == ')') {
      tokens.emplace_back(1, c);
      ++i;
    } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      ++i;
    } else {
      std::size_t j = i;
      while (j < text.size() && text[j] != '(' && text[j] != ')' && text[j] != ';' &&
             text[j] != ' ' && text[j] != '\t' && text[j] != '\n' && text[j] != '\r') {
        ++j;
      }
      tokens.push_back(text.substr(i, j - i));
      i = j;
    }
  }
  return tokens;
}

Sexp parse_sexp(const std::vector<std::string>& tokens, std::size_t& pos) {
  if (pos >= tokens.size()) throw ParseError("vnnlib: unexpected end of input");
  const std::string& tok = tokens[pos++];
  if (tok == ")") throw ParseError("vnnlib: unbalanced ')'");
  if (tok != "(") {
    Sexp atom;
    atom.is_atom = true;
    atom.text = tok;
    return atom;
  }
  Sexp list;
  while (true) {
    if (pos >= tokens.size()) throw ParseError("vnnlib: missing ')'");
    if (tokens[pos] == ")") {
      ++pos;
      return list;
    }
    list.items.push_back(parse_sexp(tokens, pos));
  }
}

std::vector<Sexp> parse_forms(const std::string& text) {
  const std::vector<std::string> tokens = sexp_tokens(text);
  std::vector<Sexp> forms;
  std::size_t pos = 0;
  while (pos < tokens.size()) forms.push_back(parse_sexp(tokens, pos));
  return forms;
}

const std::string& head(const Sexp& e) {
  static const std::string empty;
  if (e.is_atom || e.items.empty() || !e.items.front().is_atom) return empty;
  return e.items.front().text;
}

// ---------------------------------------------------------------------------
// Linear expressions over X and Y
// ---------------------------------------------------------------------------

struct LinExpr {
  VectorXd x;  // input coefficients
  VectorXd y;  // output coefficients
  double c = 0.0;

  bool has_x() const { return !x.isZero(0.0); }
  bool has_y() const { return !y.isZero(0.0); }
};

std::optional<double> numeral(const std::string& tok) {
  double v = 0.0;
  const char* begin = tok.data();
  const char* end = begin + tok.size();
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

std::optional<Index> var_index(const std::string& tok, char prefix) {
  if (tok.size() < 3 || tok[0] != prefix || tok[1] != '_') return std::nullopt;
  long v = 0;
  const char* begin = tok.data() + 2;
  const char* end = tok.data() + tok.size();
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || v < 0) return std::nullopt;
  return static_cast<Index>(v);
}

class VnnlibReader {
 public:
  VnnlibReader(Index input_dim, Index output_dim) : nx_(input_dim), ny_(output_dim) {
    lower_ = VectorXd::Constant(nx_, std::numeric_limits<double>::quiet_NaN());
    upper_ = VectorXd::Constant(nx_, std::numeric_limits<double>::quiet_NaN());
  }

  VerificationTask read(const std::string& text) {
    std::size_t assert_no = 0;
    for (const Sexp& form : parse_forms(text)) {
      if (form.is_atom) throw ParseError("vnnlib: stray atom '" + form.text + "' at top level");
      const std::string& h = head(form);
      if (h == "declare-const") {
        declare(form);
      } else if (h == "assert") {
        ++assert_no;
        const std::string path = "assert#" + std::to_string(assert_no);
        if (form.items.size() != 2) throw ParseError("vnnlib " + path + ": expected one body");
        handle_assert(form.items[1], path);
      } else if (h == "set-logic" || h == "check-sat" || h == "exit") {
        continue;  // harmless scripting forms
      } else {
        throw ParseError("vnnlib: unsupported form '" + h + "'");
      }
    }
    return finish();
  }

 private:
  [[noreturn]] void fail(const std::string& path, const std::string& msg) const {
    throw ParseError("vnnlib " + path + ": " + msg);
  }

  void declare(const Sexp& form) {
    if (form.items.size() != 3 || !form.items[1].is_atom || !form.items[2].is_atom ||
        form.items[2].text != "Real") {
      throw ParseError("vnnlib: declare-const expects a name and sort Real");
    }
    const std::string& name = form.items[1].text;
    if (const auto xi = var_index(name, 'X')) {
      if (*xi >= nx_) throw ParseError("vnnlib: input index out of range in '" + name + "'");
      return;
    }
    if (const auto yi = var_index(name, 'Y')) {
      if (*yi >= ny_) throw ParseError("vnnlib: output index out of range in '" + name + "'");
      return;
    }
    throw ParseError("vnnlib: unknown symbol '" + name + "' in declare-const");
  }

  LinExpr expr(const Sexp& e, const std::string& path) const {
    LinExpr out;
    out.x = VectorXd::Zero(nx_);
    out.y = VectorXd::Zero(ny_);

    if (e.is_atom) {
      if (const auto v = numeral(e.text)) {
        out.c = *v;
        return out;
      }
      if (const auto xi = var_index(e.text, 'X')) {
        if (*xi >= nx_) fail(path, "input index out of range in '" + e.text + "'");
        out.x(*xi) = 1.0;
        return out;
      }
      if (const auto yi = var_index(e.text, 'Y')) {
        if (*yi >= ny_) fail(path, "output index out of range in '" + e.text + "'");
        out.y(*yi) = 1.0;
        return out;
      }
      fail(path, "unknown symbol '" + e.text + "'");
    }

    const std::string& op = head(e);
    if (op == "+") {
      if (e.items.size() < 2) fail(path, "'+' needs arguments");
      for (std::size_t i = 1; i < e.items.size(); ++i) {
        const LinExpr t = expr(e.items[i], path + " +[" + std::to_string(i - 1) + "]");
        out.x += t.x;
        out.y += t.y;
        out.c += t.c;
      }
      return out;
    }
    if (op == "-") {
      if (e.items.size() < 2) fail(path, "'-' needs arguments");
      LinExpr first = expr(e.items[1], path + " -[0]");
      if (e.items.size() == 2) {
        first.x = -first.x;
        first.y = -first.y;
        first.c = -first.c;
        return first;
      }
      for (std::size_t i = 2; i < e.items.size(); ++i) {
        const LinExpr t = expr(e.items[i], path + " -[" + std::to_string(i - 1) + "]");
        first.x -= t.x;
        first.y -= t.y;
        first.c -= t.c;
      }
      return first;
    }
    if (op == "*") {
      if (e.items.size() < 2) fail(path, "'*' needs arguments");
      out.c = 1.0;
      for (std::size_t i = 1; i < e.items.size(); ++i) {
        const LinExpr t = expr(e.items[i], path + " *[" + std::to_string(i - 1) + "]");
        const bool out_const = !out.has_x() && !out.has_y();
        const bool t_const = !t.has_x() && !t.has_y();
        if (!out_const && !t_const) fail(path, "non-linear term under '*'");
        if (t_const) {
          out.x *= t.c;
          out.y *= t.c;
          out.c *= t.c;
        } else {
          out.x = t.x * out.c;
          out.y = t.y * out.c;
          out.c = t.c * out.c;
        }
      }
      return out;
    }
    fail(path, "unsupported operator '" + (op.empty() ? std::string("()") : op) + "'");
  }

  struct Row {
    VectorXd a;
    double b = 0.0;
  };

  // Normalizes (<= lhs rhs) / (>= lhs rhs) into diff <= 0 form.
  LinExpr atom_diff(const Sexp& e, const std::string& path) const {
    if (e.is_atom || e.items.size() != 3) fail(path, "expected a binary <= or >= atom");
    const std::string& op = head(e);
    if (op != "<=" && op != ">=") fail(path, "expected <= or >=, got '" + op + "'");
    const LinExpr lhs = expr(e.items[1], path + " " + op + "[lhs]");
    const LinExpr rhs = expr(e.items[2], path + " " + op + "[rhs]");
    LinExpr diff;
    if (op == "<=") {
      diff.x = lhs.x - rhs.x;
      diff.y = lhs.y - rhs.y;
      diff.c = lhs.c - rhs.c;
    } else {
      diff.x = rhs.x - lhs.x;
      diff.y = rhs.y - lhs.y;
      diff.c = rhs.c - lhs.c;
    }
    return diff;
  }

  // A conjunct is either an input bound, folded into the box, or an output
  // row appended to rows.
  void conjunct(const Sexp& e, const std::string& path, std::vector<Row>& rows) {
    const LinExpr diff = atom_diff(e, path);
    if (diff.has_x() && diff.has_y()) fail(path, "atom mixes input and output variables");

    if (diff.has_y()) {
      rows.push_back({diff.y, -diff.c});
      return;
    }
    if (!diff.has_x()) fail(path, "atom constrains no variable");

    Index var = -1;
    for (Index i = 0; i < nx_; ++i) {
      if (diff.x(i) == 0.0) continue;
      if (var >= 0) fail(path, "input constraints must bound a single variable");
      var = i;
    }
    const double coeff = diff.x(var);
    const double bound = -diff.c / coeff;
    if (coeff > 0.0) {
      if (std::isnan(upper_(var)) || bound < upper_(var)) upper_(var) = bound;
    } else {
      if (std::isnan(lower_(var)) || bound > lower_(var)) lower_(var) = bound;
    }
  }

  void handle_assert(const Sexp& body, const std::string& path) {
    if (head(body) == "or") {
      if (saw_or_) fail(path, "a second (or ...) assertion is not supported");
      saw_or_ = true;
      if (body.items.size() < 2) fail(path, "(or ...) needs at least one disjunct");
      for (std::size_t i = 1; i < body.items.size(); ++i) {
        const std::string dpath = path + " or[" + std::to_string(i - 1) + "]";
        const Sexp& d = body.items[i];
        std::vector<Row> rows;
        if (head(d) == "and") {
          if (d.items.size() < 2) fail(dpath, "(and ...) needs at least one atom");
          for (std::size_t j = 1; j < d.items.size(); ++j) {
            output_atom(d.items[j], dpath + " and[" + std::to_string(j - 1) + "]", rows);
          }
        } else {
          output_atom(d, dpath, rows);
        }
        disjuncts_.push_back(std::move(rows));
      }
      return;
    }
    if (head(body) == "and") {
      for (std::size_t j = 1; j < body.items.size(); ++j) {
        conjunct(body.items[j], path + " and[" + std::to_string(j - 1) + "]", shared_rows_);
      }
      return;
    }
    conjunct(body, path, shared_rows_);
  }

  // Inside a disjunct only output atoms make sense; an input bound there
  // would not describe a box.
  void output_atom(const Sexp& e, const std::string& path, std::vector<Row>& rows) {
    const LinExpr diff = atom_diff(e, path);
    if (diff.has_x()) fail(path, "input variables are not allowed inside (or ...)");
    if (!diff.has_y()) fail(path, "atom constrains no output variable");
    rows.push_back({diff.y, -diff.c});
  }

  VerificationTask finish() const {
    for (Index i = 0; i < nx_; ++i) {
      if (std::isnan(lower_(i))) {
        throw ParseError("vnnlib: input variable X_" + std::to_string(i) + " has no lower bound");
      }
      if (std::isnan(upper_(i))) {
        throw ParseError("vnnlib: input variable X_" + std::to_string(i) + " has no upper bound");
      }
      if (lower_(i) > upper_(i)) {
        throw ParseError("vnnlib: input bounds on X_" + std::to_string(i) + " cross");
      }
    }

    std::vector<std::vector<Row>> groups;
    if (disjuncts_.empty()) {
      if (shared_rows_.empty()) throw ParseError("vnnlib: no unsafe-region assertion");
      groups.push_back(shared_rows_);
    } else {
      for (const std::vector<Row>& d : disjuncts_) {
        std::vector<Row> rows = d;
        rows.insert(rows.end(), shared_rows_.begin(), shared_rows_.end());
        groups.push_back(std::move(rows));
      }
    }

    VerificationTask task;
    task.input_box.lower = lower_;
    task.input_box.upper = upper_;
    for (const std::vector<Row>& rows : groups) {
      HPolytope poly;
      poly.a_mat.resize(static_cast<Index>(rows.size()), ny_);
      poly.b_vec.resize(static_cast<Index>(rows.size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        poly.a_mat.row(static_cast<Index>(r)) = rows[r].a.transpose();
        poly.b_vec(static_cast<Index>(r)) = rows[r].b;
      }
      task.unsafe.push_back(std::move(poly));
    }
    return task;
  }

  Index nx_;
  Index ny_;
  VectorXd lower_;
  VectorXd upper_;
  std::vector<Row> shared_rows_;
  std::vector<std::vector<Row>> disjuncts_;
  bool saw_or_ = false;
};

std::string format_double(double v) {
  v += 0.0;  // map -0 to 0
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

VerificationTask parse_vnnlib(const std::string& text, Index input_dim, Index output_dim) {
  if (input_dim < 1 || output_dim < 1) {
    throw std::invalid_argument("parse_vnnlib: dimensions must be positive");
  }
  return VnnlibReader(input_dim, output_dim).read(text);
}

std::string write_witness(const VectorXd& x, const VectorXd& y) {
  std::string s = "sat\n(";
  for (Index i = 0; i < x.size(); ++i) {
    if (i > 0) s += "\n";
    s += "(X_" + std::to_string(i) + " " + format_double(x(i)) + ")";
  }
  for (Index j = 0; j < y.size(); ++j) {
    s += "\n(Y_" + std::to_string(j) + " " + format_double(y(j)) + ")";
  }
  s += ")\n";
  return s;
}

std::pair<VectorXd, VectorXd> parse_witness(const std::string& text, Index input_dim,
                                            Index output_dim) {
  std::vector<Sexp> forms = parse_forms(text);
  std::size_t first = 0;
  if (!forms.empty() && forms[0].is_atom && forms[0].text == "sat") first = 1;
  if (forms.size() != first + 1 || forms[first].is_atom) {
    throw ParseError("witness: expected a single list of (name value) pairs");
  }

  VectorXd x = VectorXd::Constant(input_dim, std::numeric_limits<double>::quiet_NaN());
  VectorXd y = VectorXd::Constant(output_dim, std::numeric_limits<double>::quiet_NaN());
  for (const Sexp& pair : forms[first].items) {
    if (pair.is_atom || pair.items.size() != 2 || !pair.items[0].is_atom ||
        !pair.items[1].is_atom) {
      throw ParseError("witness: expected (name value) pairs");
    }
    const std::string& name = pair.items[0].text;
    const auto value = numeral(pair.items[1].text);
    if (!value) throw ParseError("witness: invalid number '" + pair.items[1].text + "'");
    if (const auto xi = var_index(name, 'X'); xi && *xi < input_dim) {
      x(*xi) = *value;
    } else if (const auto yi = var_index(name, 'Y'); yi && *yi < output_dim) {
      y(*yi) = *value;
    } else {
      throw ParseError("witness: unknown symbol '" + name + "'");
    }
  }
  if (x.hasNaN() || y.hasNaN()) throw ParseError("witness: missing variables");
  return {std::move(x), std::move(y)};
}

}  // namespace zonoref
