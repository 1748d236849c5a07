#include "varreg/gedoc.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "varreg/errors.hpp"
#include "varreg/funcs.hpp"
#include "varreg/setvalued.hpp"

namespace varreg {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw SchemaError(path + ": " + msg);
}

void check_object(const json& j, const std::string& path,
                  const std::set<std::string>& allowed,
                  const std::set<std::string>& required) {
  if (!j.is_object()) fail(path, "expected an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) fail(path, "unknown field '" + k + "'");
  for (const auto& k : required)
    if (!j.contains(k)) fail(path, "missing field '" + k + "'");
}

double num_at(const json& j, const std::string& path,
              const std::map<std::string, double>& params) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    auto it = params.find(s);
    if (it != params.end()) return it->second;
    Expr e;
    try {
      e = Expr::parse(s, params);
    } catch (const SchemaError& err) {
      fail(path, err.what());
    }
    if (e.var_occurrences() != 0) fail(path, "expected a constant, got '" + s + "'");
    return e.eval(0.0);
  }
  fail(path, "expected a number");
}

Interval interval_at(const json& j, const std::string& path,
                     const std::map<std::string, double>& params) {
  check_object(j, path, {"lo", "hi", "lo_closed", "hi_closed"}, {"lo", "hi"});
  double lo = num_at(j.at("lo"), path + ".lo", params);
  double hi = num_at(j.at("hi"), path + ".hi", params);
  bool lc = std::isfinite(lo), hc = std::isfinite(hi);
  if (j.contains("lo_closed")) {
    if (!j.at("lo_closed").is_boolean()) fail(path + ".lo_closed", "expected a boolean");
    lc = j.at("lo_closed").get<bool>();
  }
  if (j.contains("hi_closed")) {
    if (!j.at("hi_closed").is_boolean()) fail(path + ".hi_closed", "expected a boolean");
    hc = j.at("hi_closed").get<bool>();
  }
  try {
    return Interval(lo, hi, lc, hc);
  } catch (const ModelError& e) {
    fail(path, e.what());
  }
}

Mat matrix_at(const json& j, const std::string& path, int rows, int cols,
              const std::map<std::string, double>& params) {
  if (!j.is_array() || (int)j.size() != rows) {
    fail(path, "expected " + std::to_string(rows) + " rows");
  }
  Mat M(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const json& row = j.at(r);
    std::string rp = path + "[" + std::to_string(r) + "]";
    if (!row.is_array() || (int)row.size() != cols)
      fail(rp, "expected " + std::to_string(cols) + " entries");
    for (int c = 0; c < cols; ++c)
      M(r, c) = num_at(row.at(c), rp + "[" + std::to_string(c) + "]", params);
  }
  return M;
}

Vec vector_at(const json& j, const std::string& path, int size,
              const std::map<std::string, double>& params) {
  if (!j.is_array() || (int)j.size() != size)
    fail(path, "expected " + std::to_string(size) + " entries");
  Vec v(size);
  for (int i = 0; i < size; ++i)
    v(i) = num_at(j.at(i), path + "[" + std::to_string(i) + "]", params);
  return v;
}

Expr expr_at(const json& j, const std::string& path,
             const std::map<std::string, double>& params) {
  if (!j.is_string()) fail(path, "expected an expression string");
  try {
    return Expr::parse(j.get<std::string>(), params);
  } catch (const SchemaError& e) {
    fail(path, e.what());
  }
}

SVMap1 svmap_at(const json& j, const std::string& path,
                const std::map<std::string, double>& params) {
  check_object(j, path, {"pieces"}, {"pieces"});
  const json& pieces = j.at("pieces");
  if (!pieces.is_array() || pieces.empty()) fail(path + ".pieces", "expected a non-empty array");
  std::vector<GraphPiece> out;
  for (size_t i = 0; i < pieces.size(); ++i) {
    const json& pj = pieces.at(i);
    std::string pp = path + ".pieces[" + std::to_string(i) + "]";
    if (!pj.is_object() || !pj.contains("kind")) fail(pp, "expected an object with 'kind'");
    std::string kind = pj.at("kind").is_string() ? pj.at("kind").get<std::string>() : "";
    if (kind == "arc") {
      check_object(pj, pp, {"kind", "domain", "expr"}, {"kind", "domain", "expr"});
      out.push_back(Arc{interval_at(pj.at("domain"), pp + ".domain", params),
                        expr_at(pj.at("expr"), pp + ".expr", params)});
    } else if (kind == "vseg") {
      check_object(pj, pp, {"kind", "x", "y"}, {"kind", "x", "y"});
      out.push_back(VSeg{num_at(pj.at("x"), pp + ".x", params),
                         interval_at(pj.at("y"), pp + ".y", params)});
    } else if (kind == "point") {
      check_object(pj, pp, {"kind", "x", "y"}, {"kind", "x", "y"});
      out.push_back(GPoint{num_at(pj.at("x"), pp + ".x", params),
                           num_at(pj.at("y"), pp + ".y", params)});
    } else {
      fail(pp + ".kind", "expected arc, vseg, or point");
    }
  }
  return SVMap1(std::move(out));
}

json num_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

json interval_json(const Interval& iv) {
  json j;
  j["lo"] = num_json(iv.lo);
  j["hi"] = num_json(iv.hi);
  j["lo_closed"] = iv.lo_closed;
  j["hi_closed"] = iv.hi_closed;
  return j;
}

json vec_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json mat_json(const Mat& M) {
  json rows = json::array();
  for (int r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

GEDocument parse_document(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("invalid JSON: ") + e.what());
  }
  check_object(j, "$",
               {"name", "n", "m", "params", "f", "B", "C", "F", "refpoints", "signal", "notes"},
               {"name", "n", "m", "f", "B", "C", "F"});
  if (!j.at("name").is_string()) fail("$.name", "expected a string");
  std::string name = j.at("name").get<std::string>();
  if (!j.at("n").is_number_integer() || !j.at("m").is_number_integer())
    fail("$.n", "n and m must be integers");
  int n = j.at("n").get<int>(), m = j.at("m").get<int>();
  if (n < 1 || m < 1 || n > 12 || m > 12) fail("$.n", "dimensions out of range");

  std::map<std::string, double> params;
  if (j.contains("params")) {
    if (!j.at("params").is_object()) fail("$.params", "expected an object");
    for (const auto& [k, v] : j.at("params").items()) {
      if (!v.is_number()) fail("$.params." + k, "expected a number");
      params[k] = v.get<double>();
    }
  }

  const json& fj = j.at("f");
  if (!fj.is_object() || !fj.contains("kind")) fail("$.f", "expected an object with 'kind'");
  std::variant<AffineFn, Sep1DFn> f{AffineFn{Mat::Zero(1, 1), Vec::Zero(1)}};
  std::string fkind = fj.at("kind").is_string() ? fj.at("kind").get<std::string>() : "";
  if (fkind == "affine") {
    check_object(fj, "$.f", {"kind", "A", "c"}, {"kind", "A"});
    Mat A = matrix_at(fj.at("A"), "$.f.A", n, n, params);
    Vec c = fj.contains("c") ? vector_at(fj.at("c"), "$.f.c", n, params) : Vec(Vec::Zero(n));
    f = AffineFn{std::move(A), std::move(c)};
  } else if (fkind == "sep1d") {
    if (n != 1) fail("$.f", "sep1d needs n = 1");
    check_object(fj, "$.f", {"kind", "pieces"}, {"kind", "pieces"});
    const json& pcs = fj.at("pieces");
    if (!pcs.is_array() || pcs.empty()) fail("$.f.pieces", "expected a non-empty array");
    std::vector<FnPiece> fps;
    for (size_t i = 0; i < pcs.size(); ++i) {
      std::string pp = "$.f.pieces[" + std::to_string(i) + "]";
      check_object(pcs.at(i), pp, {"domain", "expr"}, {"domain", "expr"});
      fps.push_back(FnPiece{interval_at(pcs.at(i).at("domain"), pp + ".domain", params),
                            expr_at(pcs.at(i).at("expr"), pp + ".expr", params)});
    }
    f = Sep1DFn{PiecewiseFn(std::move(fps))};
  } else {
    fail("$.f.kind", "expected affine or sep1d");
  }

  Mat B = matrix_at(j.at("B"), "$.B", n, m, params);
  Mat C = matrix_at(j.at("C"), "$.C", m, n, params);

  const json& Fj = j.at("F");
  if (!Fj.is_array() || (int)Fj.size() != m)
    fail("$.F", "expected " + std::to_string(m) + " component maps");
  std::vector<SVMap1> comps;
  for (int k = 0; k < m; ++k)
    comps.push_back(svmap_at(Fj.at(k), "$.F[" + std::to_string(k) + "]", params));

  GEDocument doc{GenEq::make(name, std::move(f), std::move(B), std::move(C),
                             SVProd{std::move(comps)}, params),
                 {},
                 std::nullopt,
                 ""};

  if (j.contains("refpoints")) {
    const json& refs = j.at("refpoints");
    if (!refs.is_array()) fail("$.refpoints", "expected an array");
    for (size_t k = 0; k < refs.size(); ++k) {
      std::string rp = "$.refpoints[" + std::to_string(k) + "]";
      check_object(refs.at(k), rp, {"p", "z", "v"}, {"p", "z"});
      Vec p = vector_at(refs.at(k).at("p"), rp + ".p", n, params);
      Vec z = vector_at(refs.at(k).at("z"), rp + ".z", n, params);
      std::optional<Vec> v;
      if (refs.at(k).contains("v")) v = vector_at(refs.at(k).at("v"), rp + ".v", m, params);
      doc.refpoints.push_back(make_refpoint(doc.ge, std::move(p), std::move(z), std::move(v)));
    }
  }
  if (j.contains("signal")) {
    if (!j.at("signal").is_string()) fail("$.signal", "expected a string");
    doc.signal = j.at("signal").get<std::string>();
  }
  if (j.contains("notes")) {
    if (!j.at("notes").is_string()) fail("$.notes", "expected a string");
    doc.notes = j.at("notes").get<std::string>();
    doc.ge.notes = doc.notes;
  }
  return doc;
}

GEDocument load_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_document(ss.str());
}

std::string document_to_json(const GEDocument& doc, int indent) {
  const GenEq& ge = doc.ge;
  json j;
  j["name"] = ge.name;
  j["n"] = ge.n;
  j["m"] = ge.m;
  if (!ge.params.empty()) {
    json pj;
    for (const auto& [k, v] : ge.params) pj[k] = v;
    j["params"] = pj;
  }
  if (const auto* af = std::get_if<AffineFn>(&ge.f)) {
    j["f"] = {{"kind", "affine"}, {"A", mat_json(af->A)}, {"c", vec_json(af->c)}};
  } else {
    const auto& sep = std::get<Sep1DFn>(ge.f);
    json pcs = json::array();
    for (const auto& pc : sep.fn.pieces())
      pcs.push_back({{"domain", interval_json(pc.dom)}, {"expr", pc.expr.sexpr()}});
    j["f"] = {{"kind", "sep1d"}, {"pieces", pcs}};
  }
  j["B"] = mat_json(ge.B);
  j["C"] = mat_json(ge.C);
  json Fj = json::array();
  for (const auto& comp : ge.F.comps) {
    json pcs = json::array();
    for (const auto& gp : comp.pieces()) {
      if (const auto* arc = std::get_if<Arc>(&gp)) {
        pcs.push_back({{"kind", "arc"},
                       {"domain", interval_json(arc->dom)},
                       {"expr", arc->y.sexpr()}});
      } else if (const auto* vs = std::get_if<VSeg>(&gp)) {
        pcs.push_back({{"kind", "vseg"}, {"x", vs->z0}, {"y", interval_json(vs->yiv)}});
      } else {
        const auto& gp2 = std::get<GPoint>(gp);
        pcs.push_back({{"kind", "point"}, {"x", gp2.z0}, {"y", gp2.y0}});
      }
    }
    Fj.push_back({{"pieces", pcs}});
  }
  j["F"] = Fj;
  json refs = json::array();
  for (const auto& r : doc.refpoints)
    refs.push_back({{"p", vec_json(r.p)}, {"z", vec_json(r.z)}, {"v", vec_json(r.v)}});
  j["refpoints"] = refs;
  if (doc.signal) j["signal"] = *doc.signal;
  if (!doc.notes.empty()) j["notes"] = doc.notes;
  return j.dump(indent);
}

}  // namespace varreg
