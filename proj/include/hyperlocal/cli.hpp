#pragma once
// Command-line surface: polynomial expression parsing, JSON records, DOT
// emission, invariant reports and the subcommand dispatcher. Kept in a header
// so the test suite can drive commands in-process.
#include <hyperlocal/bytree.hpp>
#include <hyperlocal/cluster.hpp>
#include <hyperlocal/ingestion.hpp>
#include <hyperlocal/invariants.hpp>
#include <hyperlocal/models.hpp>
#include <hyperlocal/notation.hpp>
#include <hyperlocal/poly.hpp>
#include <hyperlocal/reduction.hpp>
#include <hyperlocal/weierstrass.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cctype>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace hyperlocal {
namespace cli {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Polynomial expressions: factored integer/rational expressions in x with
// + - * / ^ and parentheses, evaluated exactly.
// ---------------------------------------------------------------------------

namespace detail {

struct PolyParser {
    const std::string& s;
    size_t pos = 0;

    void ws() {
        while (pos < s.size() && std::isspace((unsigned char)s[pos])) ++pos;
    }
    bool peek(char c) {
        ws();
        return pos < s.size() && s[pos] == c;
    }
    bool eat(char c) {
        if (!peek(c)) return false;
        ++pos;
        return true;
    }
    [[noreturn]] void fail(const std::string& what) { throw ParseError(what, pos); }

    RatPoly expr() {
        RatPoly a = term();
        while (true) {
            if (eat('+')) a = a + term();
            else if (eat('-')) a = a - term();
            else return a;
        }
    }
    RatPoly term() {
        RatPoly a = factor();
        while (true) {
            if (eat('*')) a = a * factor();
            else if (eat('/')) {
                RatPoly b = factor();
                if (b.degree() != 0) fail("division by a non-constant");
                a = BigRat(rat(1) / b.coeff(0)) * a;
            } else return a;
        }
    }
    RatPoly factor() {
        if (eat('-')) return BigRat(rat(-1)) * factor();
        eat('+');
        return power();
    }
    RatPoly power() {
        RatPoly a = atom();
        while (eat('^')) {
            long e = uint_lit();
            if (e > 10000) fail("exponent too large");
            RatPoly r = RatPoly::constant(rat(1));
            for (long i = 0; i < e; ++i) r = r * a;
            a = r;
        }
        return a;
    }
    long uint_lit() {
        ws();
        size_t start = pos;
        while (pos < s.size() && std::isdigit((unsigned char)s[pos])) ++pos;
        if (pos == start) fail("expected an integer exponent");
        return std::stol(s.substr(start, pos - start));
    }
    RatPoly atom() {
        ws();
        if (eat('(')) {
            RatPoly a = expr();
            if (!eat(')')) fail("expected ')'");
            return a;
        }
        if (pos < s.size() && (s[pos] == 'x' || s[pos] == 'X')) {
            ++pos;
            return RatPoly::x();
        }
        size_t start = pos;
        while (pos < s.size() && std::isdigit((unsigned char)s[pos])) ++pos;
        if (pos == start) fail("expected a number, 'x' or '('");
        return RatPoly::constant(BigRat(BigInt(s.substr(start, pos - start))));
    }
};

}  // namespace detail

inline RatPoly parse_poly_expr(const std::string& text) {
    detail::PolyParser pp{text};
    RatPoly f = pp.expr();
    pp.ws();
    if (pp.pos != text.size()) throw ParseError("trailing input", pp.pos);
    return f;
}

inline std::string poly_to_string(const RatPoly& f) {
    if (f.is_zero()) return "0";
    std::string out;
    for (long i = f.degree(); i >= 0; --i) {
        BigRat c = f.coeff((size_t)i);
        if (c == 0) continue;
        bool neg = c < 0;
        if (out.empty()) {
            if (neg) out += "-";
        } else {
            out += neg ? " - " : " + ";
        }
        BigRat a = neg ? BigRat(-c) : c;
        std::string cs = a.get_str();
        if (i == 0) {
            out += cs;
        } else {
            if (cs != "1") out += cs + "*";
            out += i == 1 ? "x" : "x^" + std::to_string(i);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Permutations in cycle notation (0-based, fixed points omitted).
// ---------------------------------------------------------------------------

inline std::string cycles(const std::vector<int>& perm) {
    std::string out;
    std::vector<char> seen(perm.size(), 0);
    for (size_t i = 0; i < perm.size(); ++i) {
        if (seen[i] || perm[i] == (int)i) continue;
        out += "(";
        int j = (int)i;
        bool first = true;
        while (!seen[(size_t)j]) {
            seen[(size_t)j] = 1;
            if (!first) out += " ";
            out += std::to_string(j);
            first = false;
            j = perm[(size_t)j];
        }
        out += ")";
    }
    return out.empty() ? "()" : out;
}

inline std::vector<int> perm_from_cycles(const std::string& text, int n) {
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    size_t pos = 0;
    auto ws = [&] { while (pos < text.size() && std::isspace((unsigned char)text[pos])) ++pos; };
    ws();
    while (pos < text.size()) {
        if (text[pos] != '(') throw ParseError("expected '('", pos);
        ++pos;
        std::vector<int> cyc;
        ws();
        while (pos < text.size() && text[pos] != ')') {
            size_t start = pos;
            while (pos < text.size() && std::isdigit((unsigned char)text[pos])) ++pos;
            if (pos == start) throw ParseError("expected an index", pos);
            int v = std::stoi(text.substr(start, pos - start));
            if (v < 0 || v >= n) throw ParseError("index out of range", start);
            cyc.push_back(v);
            ws();
        }
        if (pos == text.size()) throw ParseError("expected ')'", pos);
        ++pos;
        for (size_t k = 0; k < cyc.size(); ++k) perm[(size_t)cyc[k]] = cyc[(k + 1) % cyc.size()];
        ws();
    }
    return perm;
}

// ---------------------------------------------------------------------------
// JSON records. Exact rationals are always strings; unknown fields rejected.
// ---------------------------------------------------------------------------

inline void require_keys(const json& j, std::initializer_list<const char*> keys,
                         const char* where) {
    if (!j.is_object()) throw std::invalid_argument(std::string(where) + ": expected an object");
    for (auto& item : j.items()) {
        bool ok = false;
        for (const char* k : keys) ok = ok || item.key() == k;
        if (!ok)
            throw std::invalid_argument("unknown field '" + item.key() + "' in " + where);
    }
}

inline json picture_to_json(const ClusterPicture& p) {
    json out;
    out["notation"] = render_picture(p);
    out["vc"] = p.vc;
    out["squareClass"] =
        p.leadingUnitSquareClass ? json(*p.leadingUnitSquareClass) : json(nullptr);
    out["genus"] = p.genus();
    json cls = json::array();
    for (int i : p.topdown_order()) {
        json c;
        c["id"] = p[i].roots;
        c["size"] = p[i].size();
        c["depth"] = to_string(p[i].depth);
        c["relativeDepth"] = to_string(p[i].delta);
        cls.push_back(std::move(c));
    }
    out["clusters"] = std::move(cls);
    return out;
}

inline ClusterPicture picture_from_json(const json& j) {
    require_keys(j, {"notation", "vc", "squareClass", "genus", "clusters"}, "picture");
    std::optional<int> sq;
    if (j.contains("squareClass") && !j["squareClass"].is_null())
        sq = j["squareClass"].get<int>();
    long vc = j.contains("vc") ? j["vc"].get<long>() : 0;
    return parse_picture(j.at("notation").get<std::string>(), vc, sq);
}

inline json layer_to_json(const GaloisLayer& l) {
    json out;
    out["n"] = l.frob.size();
    out["frob"] = cycles(l.frob);
    out["inertia"] = cycles(l.inertiaGen);
    json eps = json::array();
    for (const auto& [id, v] : l.epsFrob) eps.push_back(json{{"cluster", id}, {"value", v}});
    out["eps"] = std::move(eps);
    out["eKR"] = l.eKR;
    out["tame"] = l.tame;
    out["tameKnown"] = l.tameKnown;
    out["residueSize"] = l.residueSize;
    out["cSquare"] = l.cSquare;
    out["provenance"] = l.annotated ? "annotated" : "computed";
    return out;
}

inline GaloisLayer layer_from_json(const json& j) {
    require_keys(j,
                 {"n", "frob", "inertia", "eps", "eKR", "tame", "tameKnown", "residueSize",
                  "cSquare", "provenance"},
                 "layer");
    int n = j.at("n").get<int>();
    GaloisLayer l = GaloisLayer::trivial(n);
    l.frob = perm_from_cycles(j.at("frob").get<std::string>(), n);
    l.inertiaGen = perm_from_cycles(j.at("inertia").get<std::string>(), n);
    for (const auto& e : j.at("eps")) {
        require_keys(e, {"cluster", "value"}, "eps entry");
        l.epsFrob[e.at("cluster").get<std::vector<int>>()] = e.at("value").get<int>();
    }
    l.eKR = j.at("eKR").get<long>();
    l.tame = j.at("tame").get<bool>();
    l.tameKnown = j.at("tameKnown").get<bool>();
    l.residueSize = j.at("residueSize").get<long>();
    l.cSquare = j.at("cSquare").get<int>();
    l.annotated = j.at("provenance").get<std::string>() == "annotated";
    return l;
}

// ---------------------------------------------------------------------------
// Invariant report: every applicable operation, per-operation errors embedded.
// ---------------------------------------------------------------------------

inline json report_json(const ClusterPicture& p, const GaloisLayer& l, long prime,
                        const RatPoly* f = nullptr) {
    json rep;
    auto guard = [&](const char* key, auto&& fn) {
        try {
            rep[key] = fn();
        } catch (const std::exception& e) {
            rep[key] = json{{"error", e.what()}};
        }
    };

    rep["picture"] = render_picture(p);
    rep["genus"] = p.genus();
    rep["eKR"] = l.eKR;
    {
        json d;
        for (int i : p.topdown_order()) d[::hyperlocal::detail::cluster_label(p[i].roots)] = to_string(p[i].depth);
        rep["depths"] = std::move(d);
    }
    auto ss = semistability(p, l);
    rep["semistable"] = ss.semistable;
    if (!ss.semistable) {
        json fl = json::array();
        for (auto& fr : ss.failures)
            fl.push_back(json{{"condition", fr.condition}, {"detail", fr.detail}});
        rep["semistableFailures"] = std::move(fl);
    }
    guard("tame", [&] { return json(is_tame(p, l, prime)); });
    guard("goodReductionCurve", [&] { return json(good_reduction_curve(p, l)); });
    guard("goodReductionJacobian", [&] { return json(good_reduction_jac(p, l)); });
    rep["potentiallyGoodCurve"] = potentially_good_curve(p);
    rep["potentiallyGoodJacobian"] = potentially_good_jac(p);
    rep["potentialToricRank"] = potential_toric_rank(p);
    rep["potentiallyTotallyToric"] = potentially_totally_toric(p);
    guard("conductor", [&] {
        return json(ss.semistable ? conductor_semistable(p) : conductor_tame(p, l));
    });
    guard("tamagawa", [&]() -> json {
        try {
            return to_string(tamagawa_easy(p, l));
        } catch (const UberevenPresent&) {
            auto t = bytree_of(p);
            return to_string(tamagawa_general(t, frobenius_automorphism(p, l, t)));
        }
    });
    guard("rootNumber", [&] {
        if (ss.semistable) return json(root_number_semistable(p, l));
        long q = l.residueSize > 0 ? l.residueSize : prime;
        return json(root_number_tame(p, l, q, prime));
    });
    guard("inertiaExponents", [&] {
        json a = json::array();
        for (const auto& e : inertia_representation(p, l, prime).abelianExponents)
            a.push_back(to_string(e));
        return a;
    });
    guard("differentialExponents", [&] {
        json a = json::array();
        for (const auto& e : differential_exponents(p).e) a.push_back(to_string(e));
        return a;
    });
    guard("omegaValuation", [&] { return to_string(omega_valuation(p)); });
    rep["discValuation"] = to_string(disc_valuation(p));
    guard("discOmegaInvariant", [&] { return to_string(disc_omega_invariant(p)); });
    guard("minimalDiscValuation", [&] { return to_string(minimal_disc_valuation(p, l, prime)); });
    guard("minimalWeierstrass", [&] { return json(is_minimal_weierstrass(p, l, prime).minimal); });
    guard("homologyRank", [&] { return json(homology(p, l).rank); });
    guard("dualGraphComponents", [&] { return json(dual_graph(p, l).components.size()); });
    guard("dualGraphBetti", [&] { return json(dual_graph(p, l).betti()); });
    rep["bytreeCanonical"] = canonical_form(bytree_of(p));
    guard("canonicalPicture",
          [&] { return json(render_picture(canonical_representative(p, l, prime))); });
    if (f) rep["discValuationExact"] = to_string(BigRat(val_p(discriminant(*f), prime).value));
    return rep;
}

// ---------------------------------------------------------------------------
// DOT emission: blue solid / yellow dashed, lengths and multiplicities as
// labels, genus inside vertex labels. Deterministic output.
// ---------------------------------------------------------------------------

inline std::string to_dot(const BYTree& t) {
    std::ostringstream os;
    os << "graph bytree {\n";
    for (size_t v = 0; v < t.verts.size(); ++v) {
        os << "  v" << v << " [label=\"g=" << t.verts[v].genus << "\", color="
           << (t.verts[v].yellow ? "yellow" : "blue")
           << (t.verts[v].yellow ? ", style=dashed" : "") << "];\n";
    }
    for (const auto& e : t.edges) {
        os << "  v" << e.a << " -- v" << e.b << " [color=" << (e.yellow ? "yellow" : "blue")
           << ", style=" << (e.yellow ? "dashed" : "solid") << ", label=\""
           << to_string(e.length) << "\"];\n";
    }
    os << "}\n";
    return os.str();
}

inline std::string to_dot(const FibreGraph& G, const std::string& name = "fibre") {
    std::ostringstream os;
    os << "graph " << name << " {\n";
    for (size_t i = 0; i < G.components.size(); ++i) {
        const auto& c = G.components[i];
        os << "  c" << i << " [label=\"" << c.id << " (g=" << c.genus << ", m="
           << c.multiplicity << ")\", color=blue];\n";
    }
    int tail = 0;
    for (size_t k = 0; k < G.chains.size(); ++k) {
        const auto& ch = G.chains[k];
        std::string label;
        if (ch.length != 0) label = "len=" + to_string(ch.length);
        if (!ch.multiplicities.empty()) {
            if (!label.empty()) label += ", ";
            label += "m=[";
            for (size_t i = 0; i < ch.multiplicities.size(); ++i)
                label += (i ? "," : "") + std::to_string(ch.multiplicities[i]);
            label += "]";
        } else if (ch.interior > 0) {
            if (!label.empty()) label += ", ";
            label += "interior=" + std::to_string(ch.interior);
        }
        std::string to;
        if (ch.to >= 0) {
            to = "c" + std::to_string(ch.to);
        } else {
            to = "t" + std::to_string(tail++);
            os << "  " << to << " [shape=point];\n";
        }
        os << "  c" << ch.from << " -- " << to << " [color=blue, style=solid";
        if (!label.empty()) os << ", label=\"" << label << "\"";
        os << "];\n";
    }
    os << "}\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// CurveRecord assembly and the command dispatcher.
// ---------------------------------------------------------------------------

struct LoadedInput {
    ClusterPicture p;
    GaloisLayer l;
    std::optional<RatPoly> f;
    long prime = 0;
    std::optional<ClusterData> cd;
    json inputEcho;
};

struct CommonFlags {
    std::string poly, picture;
    long prime = 0;
    long vc = 0;
    long residueSize = 0;
    int squareClass = 0;
    long precision = 0;
    bool wantJson = false;
    bool wantDot = false;
};

inline LoadedInput load_input(const CommonFlags& fl) {
    LoadedInput in;
    in.prime = fl.prime;
    if (!fl.poly.empty()) {
        if (fl.prime <= 0) throw std::invalid_argument("--poly requires --prime");
        in.f = parse_poly_expr(fl.poly);
        CurveSpec spec{*in.f, fl.prime, std::nullopt};
        if (fl.precision > 0) spec.precision = fl.precision;
        in.cd = cluster_data(spec);
        in.p = in.cd->picture;
        in.l = in.cd->layer;
        if (fl.residueSize > 0) in.l.residueSize = fl.residueSize;
        in.inputEcho = json{{"poly", fl.poly},
                            {"prime", fl.prime},
                            {"precision", fl.precision > 0 ? json(fl.precision) : json(nullptr)}};
    } else if (!fl.picture.empty()) {
        std::optional<int> sq;
        if (fl.squareClass != 0) sq = fl.squareClass;
        in.p = parse_picture(fl.picture, fl.vc, sq);
        in.l = GaloisLayer::trivial(in.p.n);
        in.l.residueSize = fl.residueSize > 0 ? fl.residueSize : fl.prime;
        in.l.cSquare = fl.squareClass;
        in.inputEcho = json{{"picture", fl.picture}, {"vc", fl.vc}};
    } else {
        throw std::invalid_argument("provide --poly with --prime, or --picture");
    }
    return in;
}

inline json curve_record(const LoadedInput& in, bool withReport) {
    json rec;
    rec["schema"] = 1;
    rec["input"] = in.inputEcho;
    rec["picture"] = picture_to_json(in.p);
    rec["layer"] = layer_to_json(in.l);
    if (in.f) {
        json cs = json::array();
        for (long i = 0; i <= in.f->degree(); ++i) cs.push_back(to_string(in.f->coeff((size_t)i)));
        rec["input"]["coefficients"] = std::move(cs);
    }
    if (withReport) rec["report"] = report_json(in.p, in.l, in.prime, in.f ? &*in.f : nullptr);
    return rec;
}

struct CurveRecord {
    json input;
    ClusterPicture p;
    GaloisLayer l;
    json report;
};

inline CurveRecord record_from_json(const json& j) {
    require_keys(j, {"schema", "input", "picture", "layer", "report"}, "record");
    if (j.at("schema").get<int>() != 1) throw std::invalid_argument("unsupported schema version");
    CurveRecord r;
    r.input = j.at("input");
    r.p = picture_from_json(j.at("picture"));
    r.l = layer_from_json(j.at("layer"));
    if (j.contains("report")) r.report = j.at("report");
    return r;
}

inline void print_human(std::ostream& out, const json& j, int indent = 0) {
    std::string pad((size_t)indent, ' ');
    for (const auto& item : j.items()) {
        const json& v = item.value();
        if (v.is_object() && !v.contains("error")) {
            out << pad << item.key() << ":\n";
            print_human(out, v, indent + 2);
        } else if (v.is_string()) {
            out << pad << item.key() << ": " << v.get<std::string>() << "\n";
        } else {
            out << pad << item.key() << ": " << v.dump() << "\n";
        }
    }
}

/// rational centres and residue field extracted from an ingestion run; only
/// available when all roots lie in Q_p
inline ResidueData residue_data_of(const ClusterData& cd, long prime) {
    const auto& rs = cd.roots;
    if (rs.tower->fu != 1 || rs.tower->e != 1)
        throw AssumptionViolated("rational centres (roots generate a nontrivial extension)");
    ResidueData res;
    res.prime = prime;
    res.F = rs.tower->F;
    BigInt P(prime);
    for (const auto& [id, z] : rs.centres) {
        int ci = cd.picture.find(id);
        // truncate the centre: any representative within the cluster's disc works
        long m = 1;
        BigRat ds = cd.picture[ci].depth + rat(rs.shift);
        if (ds > 0) m = mpz_get_si(BigInt(floor_rat(ds)).get_mpz_t()) + 1;
        BigInt mod = ::hyperlocal::detail::bigpow(P, (unsigned long)m);
        BigInt c0;
        mpz_fdiv_r(c0.get_mpz_t(), z.c[0].get_mpz_t(), mod.get_mpz_t());
        if (c0 * 2 > mod) c0 -= mod;  // symmetric representative
        BigRat centre = BigRat(c0);
        for (long k = 0; k < rs.shift; ++k) centre /= rat(prime);
        res.centre[id] = centre;
    }
    return res;
}

inline int dispatch(const std::vector<std::string>& args, std::istream& sin, std::ostream& out,
                    std::ostream& err);

inline int run(const std::vector<std::string>& args, std::istream& sin, std::ostream& out,
               std::ostream& err) {
    try {
        return dispatch(args, sin, out, err);
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    }
}

inline int dispatch(const std::vector<std::string>& args, std::istream& sin, std::ostream& out,
                    std::ostream& err) {
    CLI::App app{"local arithmetic of hyperelliptic curves"};
    app.require_subcommand(1);

    CommonFlags fl;
    std::string picture2, batchFile;
    auto add_common = [&](CLI::App* sub, bool withDot) {
        sub->add_option("--poly", fl.poly, "polynomial in x (factored integer expression)");
        sub->add_option("--prime", fl.prime, "residue characteristic p");
        sub->add_option("--picture", fl.picture, "cluster picture in bracket notation");
        sub->add_option("--vc", fl.vc, "valuation of the leading coefficient");
        sub->add_option("--square-class", fl.squareClass,
                        "square class (+1/-1) of the leading unit");
        sub->add_option("--residue-size", fl.residueSize, "size of the residue field");
        sub->add_option("--precision", fl.precision, "p-adic working precision override");
        sub->add_flag("--json", fl.wantJson, "emit JSON");
        if (withDot) sub->add_flag("--dot", fl.wantDot, "emit DOT");
    };

    auto* cIngest = app.add_subcommand("ingest", "compute the cluster picture of y^2 = f(x)");
    add_common(cIngest, false);
    auto* cReport = app.add_subcommand("report", "full invariant report");
    add_common(cReport, false);
    auto* cBytree = app.add_subcommand("bytree", "BY tree of the picture");
    add_common(cBytree, true);
    auto* cDual = app.add_subcommand("dualgraph", "dual graph of the special fibre");
    add_common(cDual, true);
    auto* cSnc = app.add_subcommand("snc", "SNC model special fibre");
    add_common(cSnc, true);
    auto* cCharts = app.add_subcommand("charts", "regular model charts");
    add_common(cCharts, false);
    auto* cCanon = app.add_subcommand("canonical", "canonical equivalent picture");
    add_common(cCanon, false);
    auto* cEquiv = app.add_subcommand("equiv", "test equivalence of two pictures");
    cEquiv->add_option("first", fl.picture, "first picture")->required();
    cEquiv->add_option("second", picture2, "second picture")->required();
    auto* cBatch = app.add_subcommand("batch", "process JSON lines of curve specs");
    cBatch->add_option("file", batchFile, "input file (defaults to stdin)");
    add_common(cBatch, false);

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    if (app.got_subcommand(cIngest)) {
        auto in = load_input(fl);
        if (fl.wantJson) {
            out << curve_record(in, false).dump(2) << "\n";
        } else {
            out << "picture: " << render_picture(in.p) << "\n";
            out << "vc: " << in.p.vc << "\n";
            out << "eKR: " << in.l.eKR << "\n";
            out << "tame: " << (in.l.tame ? "true" : "false") << "\n";
            out << "frob: " << cycles(in.l.frob) << "\n";
            out << "inertia: " << cycles(in.l.inertiaGen) << "\n";
            for (const auto& [id, v] : in.l.epsFrob)
                out << "eps " << ::hyperlocal::detail::cluster_label(id) << ": " << (v > 0 ? "+1" : "-1") << "\n";
        }
        return 0;
    }
    if (app.got_subcommand(cReport)) {
        auto in = load_input(fl);
        if (fl.wantJson) {
            out << curve_record(in, true).dump(2) << "\n";
        } else {
            print_human(out, report_json(in.p, in.l, in.prime, in.f ? &*in.f : nullptr));
        }
        return 0;
    }
    if (app.got_subcommand(cBytree)) {
        auto in = load_input(fl);
        BYTree t = bytree_of(in.p);
        if (fl.wantDot) {
            out << to_dot(t);
        } else {
            out << "canonical: " << canonical_form(t) << "\n";
            out << "vertices: " << t.verts.size() << "\n";
            out << "edges: " << t.edges.size() << "\n";
            out << "genus: " << genus(t) << "\n";
        }
        return 0;
    }
    if (app.got_subcommand(cDual) || app.got_subcommand(cSnc)) {
        auto in = load_input(fl);
        FibreGraph G = app.got_subcommand(cDual)
                           ? dual_graph(in.p, in.l)
                           : snc_special_fibre(in.p, in.l, in.prime);
        if (fl.wantDot) {
            out << to_dot(G, app.got_subcommand(cDual) ? "dual" : "snc");
        } else {
            out << "components: " << G.components.size() << "\n";
            out << "chains: " << G.chains.size() << "\n";
            out << "betti: " << G.betti() << "\n";
            for (const auto& c : G.components)
                out << "  " << c.id << " genus=" << c.genus << " mult=" << c.multiplicity
                    << "\n";
        }
        return 0;
    }
    if (app.got_subcommand(cCharts)) {
        if (fl.poly.empty()) throw std::invalid_argument("charts requires --poly and --prime");
        auto in = load_input(fl);
        auto res = residue_data_of(*in.cd, in.prime);
        auto CS = regular_model_charts(*in.f, in.prime, in.p, in.l, res);
        if (fl.wantJson) {
            json a = json::array();
            for (const auto& c : CS.charts) {
                json jc;
                jc["cluster"] = c.cluster;
                jc["centre"] = to_string(c.centre);
                jc["depth"] = c.depth;
                jc["nu"] = to_string(c.nuD);
                jc["omega"] = c.omegaD;
                jc["removedU"] = c.removedU;
                jc["removedW"] = c.removedW;
                jc["gluing"] = c.gluing;
                a.push_back(std::move(jc));
            }
            out << a.dump(2) << "\n";
        } else {
            for (const auto& c : CS.charts) {
                out << "chart " << ::hyperlocal::detail::cluster_label(c.cluster) << " depth " << c.depth
                    << ": nu=" << to_string(c.nuD) << " omega=" << c.omegaD << "\n";
                for (const auto& s : c.removedU) out << "  removed U: " << s << "\n";
                for (const auto& s : c.removedW) out << "  removed W: " << s << "\n";
                for (const auto& s : c.gluing) out << "  glue: " << s << "\n";
            }
        }
        return 0;
    }
    if (app.got_subcommand(cCanon)) {
        auto in = load_input(fl);
        out << render_picture(canonical_representative(in.p, in.l, in.prime)) << "\n";
        return 0;
    }
    if (app.got_subcommand(cEquiv)) {
        ClusterPicture a = parse_picture(fl.picture);
        ClusterPicture b = parse_picture(picture2);
        out << "equivalent: " << (equivalent(a, b) ? "true" : "false") << "\n";
        return 0;
    }
    if (app.got_subcommand(cBatch)) {
        std::ifstream file;
        std::istream* is = &sin;
        if (!batchFile.empty()) {
            file.open(batchFile);
            if (!file) throw std::invalid_argument("cannot open " + batchFile);
            is = &file;
        }
        std::vector<std::string> lines;
        for (std::string line; std::getline(*is, line);)
            if (!line.empty()) lines.push_back(line);
        std::vector<std::future<json>> futs;
        for (const auto& line : lines) {
            futs.push_back(std::async(std::launch::async, [line]() -> json {
                try {
                    json j = json::parse(line);
                    require_keys(j, {"poly", "prime", "precision"}, "batch entry");
                    CommonFlags bf;
                    bf.poly = j.at("poly").get<std::string>();
                    bf.prime = j.at("prime").get<long>();
                    if (j.contains("precision") && !j["precision"].is_null())
                        bf.precision = j["precision"].get<long>();
                    return curve_record(load_input(bf), true);
                } catch (const std::exception& e) {
                    return json{{"error", e.what()}};
                }
            }));
        }
        for (auto& f : futs) out << f.get().dump() << "\n";
        return 0;
    }
    err << "error: no subcommand\n";
    return 2;
}

}  // namespace cli
}  // namespace hyperlocal
