#include "nsmp/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nsmp/reference_problems.hpp"

namespace nsmp {

namespace {

using nlohmann::json;

std::string fmt_e12(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12e", v);
  return buf;
}

std::string fmt_g17(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Vec vec_from_json(const json& j) {
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

Mat mat_from_json(const json& j) {
  const auto rows = j.size();
  const auto cols = rows ? j[0].size() : 0;
  Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (size_t r = 0; r < rows; ++r)
    for (size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
  return m;
}

Vec opt_vec(const json& j, const std::string& key, int dim) {
  if (j.contains(key)) return vec_from_json(j.at(key));
  return Vec::Zero(dim);
}

Mat opt_mat(const json& j, const std::string& key, int rows, int cols) {
  if (j.contains(key)) return mat_from_json(j.at(key));
  return Mat::Zero(rows, cols);
}

Dynamics dynamics_from_json(const json& j, int n, int k) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "affine") {
    // f = A x + B u + c
    Mat A = opt_mat(j, "A", n, n), B = opt_mat(j, "B", n, k);
    Vec c = opt_vec(j, "c", n);
    Dynamics f;
    f.value = [A, B, c](double, const Vec& x, const Vec& u) { return Vec(A * x + B * u + c); };
    f.jac_x = [A](double, const Vec&, const Vec&) { return A; };
    f.jac_u = [B](double, const Vec&, const Vec&) { return B; };
    return f;
  }
  throw Error("unknown dynamics kind: " + kind);
}

StateConstraint state_constraint_from_json(const json& j, int n) {
  const std::string kind = j.at("kind").get<std::string>();
  StateConstraint h;
  if (kind == "constant") {
    double b = j.at("b").get<double>();
    h.value = [b](double, const Vec&) { return b; };
    h.grad_x = [n](double, const Vec&) { return Vec(Vec::Zero(n)); };
    return h;
  }
  if (kind == "affine") {
    // h = ax . x + at * t + b
    Vec ax = opt_vec(j, "ax", n);
    double at = j.value("at", 0.0), b = j.value("b", 0.0);
    h.value = [ax, at, b](double t, const Vec& x) { return ax.dot(x) + at * t + b; };
    h.grad_x = [ax](double, const Vec&) { return ax; };
    return h;
  }
  if (kind == "quadratic") {
    // h = 1/2 x^T Qx x + ax . x + b
    Mat Qx = opt_mat(j, "Qx", n, n);
    Vec ax = opt_vec(j, "ax", n);
    double b = j.value("b", 0.0);
    h.value = [Qx, ax, b](double, const Vec& x) { return 0.5 * x.dot(Qx * x) + ax.dot(x) + b; };
    h.grad_x = [Qx, ax](double, const Vec& x) { return Vec(0.5 * (Qx + Qx.transpose()) * x + ax); };
    return h;
  }
  throw Error("unknown state-constraint kind: " + kind);
}

MixedConstraint mixed_from_json(const json& j, int n, int k) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "control_bound") {
    int comp = j.at("index").get<int>();
    double bound = j.at("bound").get<double>();
    bool upper = j.at("side").get<std::string>() == "upper";
    MixedConstraint g;
    g.is_control_bound = true;
    g.bound_comp = comp;
    g.bound_value = bound;
    g.bound_is_upper = upper;
    if (upper)
      g.value = [comp, bound](double, const Vec&, const Vec& u) { return u[comp] - bound; };
    else
      g.value = [comp, bound](double, const Vec&, const Vec& u) { return bound - u[comp]; };
    g.grad_x = [n](double, const Vec&, const Vec&) { return Vec(Vec::Zero(n)); };
    g.grad_u = [comp, upper, k](double, const Vec&, const Vec&) {
      Vec v = Vec::Zero(k);
      v[comp] = upper ? 1.0 : -1.0;
      return v;
    };
    return g;
  }
  if (kind == "affine") {
    // g = ax . x + au . u + at * t + b
    Vec ax = opt_vec(j, "ax", n), au = opt_vec(j, "au", k);
    double at = j.value("at", 0.0), b = j.value("b", 0.0);
    MixedConstraint g;
    g.value = [ax, au, at, b](double t, const Vec& x, const Vec& u) {
      return ax.dot(x) + au.dot(u) + at * t + b;
    };
    g.grad_x = [ax](double, const Vec&, const Vec&) { return ax; };
    g.grad_u = [au](double, const Vec&, const Vec&) { return au; };
    return g;
  }
  if (kind == "quadratic") {
    Mat Qx = opt_mat(j, "Qx", n, n), Qu = opt_mat(j, "Qu", k, k);
    Vec ax = opt_vec(j, "ax", n), au = opt_vec(j, "au", k);
    double b = j.value("b", 0.0);
    MixedConstraint g;
    g.value = [Qx, Qu, ax, au, b](double, const Vec& x, const Vec& u) {
      return 0.5 * x.dot(Qx * x) + 0.5 * u.dot(Qu * u) + ax.dot(x) + au.dot(u) + b;
    };
    g.grad_x = [Qx, ax](double, const Vec& x, const Vec&) {
      return Vec(0.5 * (Qx + Qx.transpose()) * x + ax);
    };
    g.grad_u = [Qu, au](double, const Vec&, const Vec& u) {
      return Vec(0.5 * (Qu + Qu.transpose()) * u + au);
    };
    return g;
  }
  throw Error("unknown mixed-constraint kind: " + kind);
}

EndpointCost endpoint_cost_from_json(const json& j, int n) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "affine") {
    // l = ca . xa + cb . xb + b
    Vec ca = opt_vec(j, "ca", n), cb = opt_vec(j, "cb", n);
    double b = j.value("b", 0.0);
    EndpointCost l;
    l.value = [ca, cb, b](const Vec& xa, const Vec& xb) { return ca.dot(xa) + cb.dot(xb) + b; };
    l.grad_a = [ca](const Vec&, const Vec&) { return ca; };
    l.grad_b = [cb](const Vec&, const Vec&) { return cb; };
    return l;
  }
  if (kind == "quadratic") {
    Mat Qa = opt_mat(j, "Qa", n, n), Qb = opt_mat(j, "Qb", n, n);
    Vec ca = opt_vec(j, "ca", n), cb = opt_vec(j, "cb", n);
    double b = j.value("b", 0.0);
    EndpointCost l;
    l.value = [Qa, Qb, ca, cb, b](const Vec& xa, const Vec& xb) {
      return 0.5 * xa.dot(Qa * xa) + 0.5 * xb.dot(Qb * xb) + ca.dot(xa) + cb.dot(xb) + b;
    };
    l.grad_a = [Qa, ca](const Vec& xa, const Vec&) {
      return Vec(0.5 * (Qa + Qa.transpose()) * xa + ca);
    };
    l.grad_b = [Qb, cb](const Vec&, const Vec& xb) {
      return Vec(0.5 * (Qb + Qb.transpose()) * xb + cb);
    };
    return l;
  }
  throw Error("unknown endpoint-cost kind: " + kind);
}

RunningCost running_cost_from_json(const json& j, int n, int k) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "affine") {
    Vec ax = opt_vec(j, "ax", n), au = opt_vec(j, "au", k);
    double at = j.value("at", 0.0), b = j.value("b", 0.0);
    RunningCost L;
    L.value = [ax, au, at, b](double t, const Vec& x, const Vec& u) {
      return ax.dot(x) + au.dot(u) + at * t + b;
    };
    L.grad_x = [ax](double, const Vec&, const Vec&) { return ax; };
    L.grad_u = [au](double, const Vec&, const Vec&) { return au; };
    return L;
  }
  if (kind == "quadratic") {
    Mat Qx = opt_mat(j, "Qx", n, n), Qu = opt_mat(j, "Qu", k, k);
    Vec ax = opt_vec(j, "ax", n), au = opt_vec(j, "au", k);
    double b = j.value("b", 0.0);
    RunningCost L;
    L.value = [Qx, Qu, ax, au, b](double, const Vec& x, const Vec& u) {
      return 0.5 * x.dot(Qx * x) + 0.5 * u.dot(Qu * u) + ax.dot(x) + au.dot(u) + b;
    };
    L.grad_x = [Qx, ax](double, const Vec& x, const Vec&) {
      return Vec(0.5 * (Qx + Qx.transpose()) * x + ax);
    };
    L.grad_u = [Qu, au](double, const Vec&, const Vec& u) {
      return Vec(0.5 * (Qu + Qu.transpose()) * u + au);
    };
    return L;
  }
  throw Error("unknown running-cost kind: " + kind);
}

EndpointDescriptor endpoint_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "point") return EndpointDescriptor::make_point(vec_from_json(j.at("value")));
  if (kind == "box")
    return EndpointDescriptor::make_box(vec_from_json(j.at("lower")), vec_from_json(j.at("upper")));
  if (kind == "affine")
    return EndpointDescriptor::make_affine(vec_from_json(j.at("offset")),
                                           mat_from_json(j.at("basis")));
  if (kind == "free") return EndpointDescriptor::make_free();
  throw Error("unknown endpoint kind: " + kind);
}

}  // namespace

OCProblem problem_from_json_text(const std::string& text) {
  json j = json::parse(text);
  if (j.contains("ref")) return load_reference_problem(j.at("ref").get<std::string>()).problem;

  OCProblem p;
  p.t0 = j.at("horizon")[0].get<double>();
  p.t1 = j.at("horizon")[1].get<double>();
  p.n = j.at("state_dim").get<int>();
  p.k = j.at("control_dim").get<int>();
  p.dynamics = dynamics_from_json(j.at("dynamics"), p.n, p.k);
  p.endpoint_cost = endpoint_cost_from_json(j.at("endpoint_cost"), p.n);
  if (j.contains("running_cost") && !j.at("running_cost").is_null())
    p.running_cost = running_cost_from_json(j.at("running_cost"), p.n, p.k);
  p.state_constraint = state_constraint_from_json(j.at("state_constraint"), p.n);
  for (const auto& g : j.at("mixed_constraints"))
    p.mixed_constraints.push_back(mixed_from_json(g, p.n, p.k));
  p.endpoint_a = endpoint_from_json(j.at("endpoint_set").at("a"));
  p.endpoint_b = endpoint_from_json(j.at("endpoint_set").at("b"));
  p.tube_radius = j.value("tube_radius", 0.5);
  if (j.contains("control_box")) {
    p.control_lo = vec_from_json(j.at("control_box").at("lower"));
    p.control_hi = vec_from_json(j.at("control_box").at("upper"));
  }
  p.name = j.value("name", std::string("problem"));
  return p;
}

OCProblem load_problem_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open problem file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return problem_from_json_text(ss.str());
}

namespace {

void append_vec(std::string& s, const Vec& v, std::string (*fmt)(double)) {
  s += '[';
  for (int i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += fmt(v[i]);
  }
  s += ']';
}

void append_vec_list(std::string& s, const std::vector<Vec>& vs, std::string (*fmt)(double)) {
  s += '[';
  for (size_t i = 0; i < vs.size(); ++i) {
    if (i) s += ',';
    append_vec(s, vs[i], fmt);
  }
  s += ']';
}

std::string json_escape(const std::string& in) {
  std::string out;
  for (char c : in) {
    if (c == '"' || c == '\\') {
      out += '\\';
      out += c;
    } else if (c == '\n') {
      out += "\\n";
    } else {
      out += c;
    }
  }
  return out;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path);
  out << content;
  if (!out) throw Error("write failed: " + path);
}

}  // namespace

void write_pack_json(const std::string& path, const Process& process, const MultiplierPack& pack,
                     unsigned seed) {
  std::string s = "{\n";
  s += "\"seed\": " + std::to_string(seed) + ",\n";
  s += "\"lambda0\": " + fmt_g17(pack.lambda0) + ",\n";
  s += "\"grid\": ";
  append_vec(s, process.grid, fmt_g17);
  s += ",\n\"states\": ";
  append_vec_list(s, process.states, fmt_g17);
  s += ",\n\"controls\": ";
  append_vec_list(s, process.controls, fmt_g17);
  s += ",\n\"p\": ";
  append_vec_list(s, pack.p, fmt_g17);
  s += ",\n\"q\": ";
  append_vec_list(s, pack.q, fmt_g17);
  s += ",\n\"q_b\": ";
  append_vec(s, pack.q_b, fmt_g17);
  s += ",\n\"gamma\": ";
  append_vec_list(s, pack.gamma, fmt_g17);
  s += ",\n\"measure\": {\"weights\": ";
  append_vec(s, pack.measure.weights, fmt_g17);
  s += ", \"endpoint_atom\": " + fmt_g17(pack.measure.endpoint_atom) + "}\n";
  s += "}\n";
  write_file(path, s);
}

PackFile read_pack_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open pack file: " + path);
  json j = json::parse(in);
  PackFile out;
  out.process.grid = vec_from_json(j.at("grid"));
  for (const auto& x : j.at("states")) out.process.states.push_back(vec_from_json(x));
  for (const auto& u : j.at("controls")) out.process.controls.push_back(vec_from_json(u));
  out.pack.lambda0 = j.at("lambda0").get<double>();
  for (const auto& v : j.at("p")) out.pack.p.push_back(vec_from_json(v));
  for (const auto& v : j.at("q")) out.pack.q.push_back(vec_from_json(v));
  out.pack.q_b = vec_from_json(j.at("q_b"));
  for (const auto& v : j.at("gamma")) out.pack.gamma.push_back(vec_from_json(v));
  out.pack.measure.weights = vec_from_json(j.at("measure").at("weights"));
  out.pack.measure.endpoint_atom = j.at("measure").at("endpoint_atom").get<double>();
  return out;
}

std::string report_to_json(const CheckReport& report) {
  // Keys are emitted in sorted order at every level.
  std::string s = "{\n";
  s += "\"audits\": [";
  for (size_t i = 0; i < report.audits.size(); ++i) {
    const auto& a = report.audits[i];
    if (i) s += ',';
    s += "\n  {\"constants\": {";
    bool first = true;
    for (const auto& [key, value] : a.constants) {  // std::map iterates sorted
      if (!first) s += ", ";
      first = false;
      s += '"' + json_escape(key) + "\": " + fmt_e12(value);
    }
    s += "}, \"name\": \"" + json_escape(a.name) + "\", \"note\": \"" + json_escape(a.note) +
         "\", \"verdict\": \"" + to_string(a.verdict) + "\", \"worst_point\": ";
    append_vec(s, a.worst_point, fmt_e12);
    s += "}";
  }
  s += "\n],\n";
  s += "\"audits_pass\": " + std::string(report.audits_pass ? "true" : "false") + ",\n";
  s += "\"conditions\": [";
  for (size_t i = 0; i < report.conditions.size(); ++i) {
    const auto& c = report.conditions[i];
    if (i) s += ',';
    s += "\n  {\"informational\": " + std::string(c.informational ? "true" : "false");
    s += ", \"max_residual\": " + fmt_e12(c.max_residual);
    s += ", \"name\": \"" + json_escape(c.name) + "\"";
    s += ", \"note\": \"" + json_escape(c.note) + "\"";
    s += ", \"residuals\": ";
    append_vec(s, c.residuals, fmt_e12);
    s += ", \"tolerance\": " + fmt_e12(c.tolerance);
    s += ", \"verdict\": \"" + to_string(c.verdict) + "\"}";
  }
  s += "\n],\n";
  s += "\"conditions_pass\": " + std::string(report.conditions_pass ? "true" : "false") + ",\n";
  s += "\"mode\": \"" + json_escape(report.mode) + "\",\n";
  s += "\"overall\": \"" + std::string(report.overall ? "pass" : "fail") + "\",\n";
  s += "\"seed\": " + std::to_string(report.seed) + "\n";
  s += "}\n";
  return s;
}

void write_report_json(const std::string& path, const CheckReport& report) {
  write_file(path, report_to_json(report));
}

std::string trace_to_json(const ContinuationTrace& trace, unsigned seed) {
  std::string s = "{\n\"seed\": " + std::to_string(seed) + ",\n\"records\": [";
  for (size_t i = 0; i < trace.records.size(); ++i) {
    const auto& r = trace.records[i];
    if (i) s += ',';
    s += "\n  {\"converged\": " + std::string(r.converged ? "true" : "false");
    if (r.ekeland_bound_ok)
      s += ", \"ekeland_bound_ok\": " + std::string(*r.ekeland_bound_ok ? "true" : "false");
    if (r.eps_hat) s += ", \"eps_hat\": " + fmt_e12(*r.eps_hat);
    s += ", \"feasibility\": " + fmt_e12(r.feasibility);
    s += ", \"inner_iterations\": " + std::to_string(r.inner_iterations);
    if (r.l1_distance) s += ", \"l1_distance\": " + fmt_e12(*r.l1_distance);
    s += ", \"max_hplus\": " + fmt_e12(r.max_hplus);
    s += ", \"objective\": " + fmt_e12(r.objective);
    s += ", \"outer_iterations\": " + std::to_string(r.outer_iterations);
    s += ", \"penalty_index\": " + fmt_e12(r.penalty_index);
    if (r.replay_drift) s += ", \"replay_drift\": " + fmt_e12(*r.replay_drift);
    s += ", \"stationarity\": " + fmt_e12(r.stationarity) + "}";
  }
  s += "\n],\n\"final_penalty_index\": " + fmt_e12(trace.final_penalty_index);
  s += ",\n\"truncated\": " + std::string(trace.truncated ? "true" : "false") + "\n}\n";
  return s;
}

void write_trace_json(const std::string& path, const ContinuationTrace& trace, unsigned seed) {
  write_file(path, trace_to_json(trace, seed));
}

void write_solution_csv(const std::string& path, const Process& process, unsigned seed) {
  std::string s = "# nsmp solution, seed=" + std::to_string(seed) + "\n";
  const int n = static_cast<int>(process.states.front().size());
  const int k = static_cast<int>(process.controls.front().size());
  s += "t";
  for (int i = 0; i < n; ++i) s += ",x" + std::to_string(i);
  for (int c = 0; c < k; ++c) s += ",u" + std::to_string(c);
  s += "\n";
  const int N = process.steps();
  for (int m = 0; m <= N; ++m) {
    s += fmt_g17(process.grid[m]);
    for (int i = 0; i < n; ++i) s += "," + fmt_g17(process.states[static_cast<size_t>(m)][i]);
    // The final node repeats the last interval's control.
    const Vec& u = process.controls[static_cast<size_t>(std::min(m, N - 1))];
    for (int c = 0; c < k; ++c) s += "," + fmt_g17(u[c]);
    s += "\n";
  }
  write_file(path, s);
}

void write_multipliers_csv(const std::string& path, const Process& process,
                           const MultiplierPack& pack, unsigned seed) {
  std::string s = "# nsmp multipliers, seed=" + std::to_string(seed) + "\n";
  const int n = static_cast<int>(pack.p.front().size());
  s += "t";
  for (int i = 0; i < n; ++i) s += ",p" + std::to_string(i);
  for (int i = 0; i < n; ++i) s += ",q" + std::to_string(i);
  s += ",mu_weight";
  for (int i = 0; i < n; ++i) s += ",gamma" + std::to_string(i);
  s += ",is_atom\n";
  const int N = process.steps();
  for (int m = 0; m <= N; ++m) {
    s += fmt_g17(process.grid[m]);
    for (int i = 0; i < n; ++i) s += "," + fmt_g17(pack.p[static_cast<size_t>(m)][i]);
    for (int i = 0; i < n; ++i) s += "," + fmt_g17(pack.q[static_cast<size_t>(m)][i]);
    s += "," + fmt_g17(pack.measure.weights[m]);
    for (int i = 0; i < n; ++i) s += "," + fmt_g17(pack.gamma[static_cast<size_t>(m)][i]);
    s += ",0\n";
  }
  // Extra row for t = b: q(b) and the endpoint atom.
  s += fmt_g17(process.grid[N]);
  for (int i = 0; i < n; ++i) s += "," + fmt_g17(pack.p[static_cast<size_t>(N)][i]);
  for (int i = 0; i < n; ++i) s += "," + fmt_g17(pack.q_b[i]);
  s += "," + fmt_g17(pack.measure.endpoint_atom);
  for (int i = 0; i < n; ++i) s += "," + fmt_g17(pack.gamma[static_cast<size_t>(N)][i]);
  s += ",1\n";
  write_file(path, s);
}

void write_residuals_csv(const std::string& path, const Process& process,
                         const CheckReport& report, unsigned seed) {
  std::string s = "# nsmp nodewise residuals, seed=" + std::to_string(seed) + "\n";
  std::vector<const ConditionRecord*> cols;
  for (const auto& c : report.conditions)
    if (c.residuals.size() > 0) cols.push_back(&c);
  s += "t";
  for (const auto* c : cols) s += "," + c->name;
  s += "\n";
  Eigen::Index rows = 0;
  for (const auto* c : cols) rows = std::max(rows, c->residuals.size());
  for (Eigen::Index m = 0; m < rows; ++m) {
    s += fmt_g17(process.grid[static_cast<int>(m)]);
    for (const auto* c : cols)
      s += "," + (m < c->residuals.size() ? fmt_e12(c->residuals[m]) : std::string(""));
    s += "\n";
  }
  write_file(path, s);
}

}  // namespace nsmp
