#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "diffdcm/data.hpp"
#include "diffdcm/error.hpp"
#include "diffdcm/model.hpp"

namespace diffdcm {

// One product term of a closed-form utility: coefficient * prod_i x_i^e_i.
struct Term {
    double coefficient = 0.0;
    std::vector<double> exponents; // one per feature
};

// Closed-form view of one alternative's utility: constant + sum of terms.
struct UtilityExpression {
    std::string alt_name;
    double constant = 0.0;
    std::vector<Term> terms;
    std::vector<std::string> feature_names;
};

// Transcribes the trained parameters: term j of alternative k has coefficient
// w2(j,k) and exponent column j of w1; the constant is b2(0,k). Terms with
// |coefficient| < prune_threshold are dropped from the returned expression,
// so a threshold of 0 keeps evaluation exact.
inline std::vector<UtilityExpression> extract_utilities(const ModelParams& params,
                                                        double prune_threshold = 0.0) {
    params.validate();
    std::vector<UtilityExpression> out;
    for (std::size_t k = 0; k < params.num_alternatives(); ++k) {
        UtilityExpression e;
        e.alt_name = params.alt_names[k];
        e.constant = params.b2(0, k);
        e.feature_names = params.feature_names;
        for (std::size_t j = 0; j < params.num_nodes(); ++j) {
            const double c = params.w2(j, k);
            if (std::abs(c) < prune_threshold) continue;
            Term t;
            t.coefficient = c;
            t.exponents.resize(params.num_features());
            for (std::size_t i = 0; i < params.num_features(); ++i)
                t.exponents[i] = params.w1(i, j);
            e.terms.push_back(std::move(t));
        }
        out.push_back(std::move(e));
    }
    return out;
}

inline double evaluate_term(const Term& t, const std::vector<double>& x,
                            const std::vector<std::string>& names) {
    double prod = 1.0;
    for (std::size_t i = 0; i < t.exponents.size(); ++i) {
        const double e = t.exponents[i];
        if (e == 0.0) continue;
        const double xi = x[i];
        if (xi <= 0.0) {
            const bool integer_exp = (e == std::round(e));
            if (!integer_exp || xi < 0.0 || e < 0.0)
                throw domain_error("evaluate: feature '" +
                                   (i < names.size() ? names[i] : std::to_string(i)) +
                                   "' is non-positive with exponent " + std::to_string(e));
        }
        prod *= std::pow(xi, e);
    }
    return prod;
}

inline double evaluate_expression(const UtilityExpression& expr, const std::vector<double>& x) {
    if (!expr.terms.empty() && x.size() != expr.terms[0].exponents.size())
        throw invalid_input_error("evaluate: x length does not match term exponents");
    double v = expr.constant;
    for (const Term& t : expr.terms) v += t.coefficient * evaluate_term(t, x, expr.feature_names);
    return v;
}

// Shifts every constant by the reference alternative's constant so the
// reference gets 0. Softmax probabilities are unchanged.
inline std::vector<UtilityExpression> normalize_ascs(std::vector<UtilityExpression> exprs,
                                                     std::size_t reference_index = 0) {
    if (reference_index >= exprs.size())
        throw invalid_input_error("normalize_ascs: reference index out of range");
    const double ref = exprs[reference_index].constant;
    for (auto& e : exprs) e.constant -= ref;
    return exprs;
}

// Merges terms with identical exponent vectors (entries compared within tol)
// by summing coefficients. Keeps first-occurrence order.
inline UtilityExpression aggregate_terms(const UtilityExpression& expr, double tol = 1e-12) {
    UtilityExpression out = expr;
    out.terms.clear();
    for (const Term& t : expr.terms) {
        bool merged = false;
        for (Term& u : out.terms) {
            bool same = true;
            for (std::size_t i = 0; i < t.exponents.size() && same; ++i)
                same = std::abs(t.exponents[i] - u.exponents[i]) <= tol;
            if (same) {
                u.coefficient += t.coefficient;
                merged = true;
                break;
            }
        }
        if (!merged) out.terms.push_back(t);
    }
    return out;
}

inline double term_degree(const Term& t) {
    double d = 0.0;
    for (double e : t.exponents) d += std::abs(e);
    return d;
}

inline bool has_integer_exponents(const Term& t, double tol = 1e-9) {
    for (double e : t.exponents)
        if (std::abs(e - std::round(e)) > tol) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Rendering and parsing
// ---------------------------------------------------------------------------

namespace detail {

inline std::string format_number(double v, int digits) {
    char buf[40];
    if (digits >= 17)
        std::snprintf(buf, sizeof buf, "%.17g", v);
    else
        std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

inline std::string format_exponent(double e, int digits) {
    if (std::abs(e - std::round(e)) <= 1e-9) {
        char buf[24];
        std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(std::llround(e)));
        return buf;
    }
    return format_number(e, digits);
}

} // namespace detail

// Factor part of a term, e.g. "x1^2·x2" or "C_SM/T_car". Negative exponents
// render as division; an exponent of 1 is left implicit; all-zero exponents
// render as "1".
inline std::string render_factors(const Term& t, const std::vector<std::string>& names,
                                  int digits = 3) {
    std::vector<std::string> num, den;
    for (std::size_t i = 0; i < t.exponents.size(); ++i) {
        const double e = t.exponents[i];
        if (e == 0.0) continue;
        const double mag = std::abs(e);
        std::string f = names[i];
        if (std::abs(mag - 1.0) > 1e-9) f += "^" + detail::format_exponent(mag, digits);
        (e > 0.0 ? num : den).push_back(f);
    }
    std::string s;
    for (std::size_t i = 0; i < num.size(); ++i) s += (i ? "·" : "") + num[i];
    if (s.empty() && den.empty()) return "1";
    if (!den.empty()) {
        if (s.empty()) s = "1";
        if (den.size() == 1) {
            s += "/" + den[0];
        } else {
            s += "/(";
            for (std::size_t i = 0; i < den.size(); ++i) s += (i ? "·" : "") + den[i];
            s += ")";
        }
    }
    return s;
}

// Right-hand side only, e.g. "3.000·x1^2·x2 - 1.000". digits=17 produces a
// representation that parses back to the same doubles.
inline std::string render_expression(const UtilityExpression& expr, int digits = 3) {
    std::string s;
    auto append = [&](double value, const std::string& factors) {
        const bool neg = std::signbit(value) && value != 0.0;
        const std::string mag = detail::format_number(std::abs(value), digits);
        if (s.empty())
            s += (neg ? "-" : "");
        else
            s += neg ? " - " : " + ";
        s += mag;
        if (!factors.empty() && factors != "1") s += "·" + factors;
    };
    for (const Term& t : expr.terms) append(t.coefficient, render_factors(t, expr.feature_names, digits));
    const std::string cstr = detail::format_number(std::abs(expr.constant), digits);
    const bool drop_const = !expr.terms.empty() && digits < 17 && cstr.find_first_not_of("0.") == std::string::npos;
    if (s.empty() || !drop_const) append(expr.constant, "");
    return s;
}

inline std::string render_utility_line(const UtilityExpression& expr, int digits = 3) {
    return "V_" + expr.alt_name + " = " + render_expression(expr, digits);
}

// Parses the renderer's output (both display and full-precision forms) back
// into an expression over the given feature names. Accepts '*' as well as
// the middle dot, and an optional "V_name =" prefix.
inline UtilityExpression parse_expression(const std::string& text,
                                          const std::vector<std::string>& feature_names) {
    UtilityExpression expr;
    expr.feature_names = feature_names;

    std::string body = text;
    if (auto eq = body.find('='); eq != std::string::npos) {
        std::string lhs = body.substr(0, eq);
        expr.alt_name = lhs;
        // strip "V_" and whitespace from the name
        std::erase_if(expr.alt_name, [](unsigned char c) { return std::isspace(c); });
        if (expr.alt_name.rfind("V_", 0) == 0) expr.alt_name = expr.alt_name.substr(2);
        body = body.substr(eq + 1);
    }

    std::size_t pos = 0;
    auto skip_ws = [&] {
        while (pos < body.size() && std::isspace(static_cast<unsigned char>(body[pos]))) ++pos;
    };
    auto at_mul = [&]() -> std::size_t { // returns byte length of a multiplication sign at pos
        if (pos < body.size() && body[pos] == '*') return 1;
        if (pos + 1 < body.size() && static_cast<unsigned char>(body[pos]) == 0xC2 &&
            static_cast<unsigned char>(body[pos + 1]) == 0xB7)
            return 2;
        return 0;
    };
    auto parse_number = [&]() -> double {
        const char* begin = body.c_str() + pos;
        char* end = nullptr;
        double v = std::strtod(begin, &end);
        if (end == begin) throw parse_error("expression: expected a number at '" +
                                            body.substr(pos, 12) + "'");
        pos += static_cast<std::size_t>(end - begin);
        return v;
    };
    auto parse_ident = [&]() -> std::size_t {
        std::size_t start = pos;
        while (pos < body.size() &&
               (std::isalnum(static_cast<unsigned char>(body[pos])) || body[pos] == '_'))
            ++pos;
        if (pos == start) throw parse_error("expression: expected a feature name at '" +
                                            body.substr(pos, 12) + "'");
        const std::string name = body.substr(start, pos - start);
        for (std::size_t i = 0; i < feature_names.size(); ++i)
            if (feature_names[i] == name) return i;
        throw parse_error("expression: unknown feature '" + name + "'");
    };
    // factor := ident ['^' number]; adds sign*exponent into t
    auto parse_factor = [&](Term& t, double sign) {
        const std::size_t i = parse_ident();
        double e = 1.0;
        skip_ws();
        if (pos < body.size() && body[pos] == '^') {
            ++pos;
            e = parse_number();
        }
        t.exponents[i] += sign * e;
    };

    bool first = true;
    while (true) {
        skip_ws();
        if (pos >= body.size()) break;
        double sign = 1.0;
        if (body[pos] == '+' || body[pos] == '-') {
            sign = (body[pos] == '-') ? -1.0 : 1.0;
            ++pos;
            skip_ws();
        } else if (!first) {
            throw parse_error("expression: expected '+' or '-' at '" + body.substr(pos, 12) +
                              "'");
        }
        first = false;

        Term t;
        t.exponents.assign(feature_names.size(), 0.0);
        double coeff;
        if (std::isalpha(static_cast<unsigned char>(body[pos])) || body[pos] == '_') {
            coeff = 1.0; // implicit coefficient
            parse_factor(t, +1.0);
        } else {
            coeff = parse_number();
        }
        coeff *= sign;

        while (true) {
            skip_ws();
            if (std::size_t len = at_mul(); len > 0) {
                pos += len;
                skip_ws();
                if (pos < body.size() && body[pos] == '1' &&
                    (pos + 1 >= body.size() || body[pos + 1] == '/')) {
                    ++pos; // unit numerator, e.g. "0.3·1/T_train"
                } else {
                    parse_factor(t, +1.0);
                }
            } else if (pos < body.size() && body[pos] == '/') {
                ++pos;
                skip_ws();
                if (pos < body.size() && body[pos] == '(') {
                    ++pos;
                    while (true) {
                        skip_ws();
                        parse_factor(t, -1.0);
                        skip_ws();
                        if (std::size_t len2 = at_mul(); len2 > 0) {
                            pos += len2;
                            continue;
                        }
                        break;
                    }
                    skip_ws();
                    if (pos >= body.size() || body[pos] != ')')
                        throw parse_error("expression: expected ')'");
                    ++pos;
                } else {
                    parse_factor(t, -1.0);
                }
            } else {
                break;
            }
        }

        bool all_zero = true;
        for (double e : t.exponents) all_zero = all_zero && e == 0.0;
        if (all_zero) {
            expr.constant += coeff;
        } else {
            t.coefficient = coeff;
            expr.terms.push_back(std::move(t));
        }
    }
    return expr;
}

// ---------------------------------------------------------------------------
// Term influence (most influential terms over a dataset)
// ---------------------------------------------------------------------------

struct TermInfluence {
    std::string term;       // factors only, e.g. "T_car/C_car"
    double coefficient = 0.0;
    double mean_term_value = 0.0; // average of the term's product over the data
    double influence = 0.0;       // |coefficient * mean_term_value|
    int sign = 0;                 // sign of the mean contribution
};

struct AlternativeInfluence {
    std::string alt_name;
    bool constant_only = false;
    std::vector<TermInfluence> terms; // all terms, sorted by influence, descending
    std::optional<TermInfluence> top_positive;
    std::optional<TermInfluence> top_negative;
};

inline std::vector<AlternativeInfluence> rank_influential_terms(
    const std::vector<UtilityExpression>& exprs, const Dataset& ds) {
    ds.validate();
    std::vector<AlternativeInfluence> out;
    std::vector<double> x(ds.num_features());
    for (const auto& expr : exprs) {
        AlternativeInfluence ai;
        ai.alt_name = expr.alt_name;
        if (expr.terms.empty()) {
            ai.constant_only = true;
            out.push_back(std::move(ai));
            continue;
        }
        for (const Term& t : expr.terms) {
            double sum = 0.0;
            for (std::size_t r = 0; r < ds.num_samples(); ++r) {
                for (std::size_t j = 0; j < ds.num_features(); ++j) x[j] = ds.features(r, j);
                sum += evaluate_term(t, x, expr.feature_names);
            }
            TermInfluence ti;
            ti.term = render_factors(t, expr.feature_names);
            ti.coefficient = t.coefficient;
            ti.mean_term_value = sum / static_cast<double>(ds.num_samples());
            const double contribution = ti.coefficient * ti.mean_term_value;
            ti.influence = std::abs(contribution);
            ti.sign = contribution > 0.0 ? 1 : (contribution < 0.0 ? -1 : 0);
            ai.terms.push_back(std::move(ti));
        }
        std::stable_sort(ai.terms.begin(), ai.terms.end(),
                         [](const TermInfluence& a, const TermInfluence& b) {
                             return a.influence > b.influence;
                         });
        for (const auto& ti : ai.terms) {
            if (ti.sign > 0 && !ai.top_positive) ai.top_positive = ti;
            if (ti.sign < 0 && !ai.top_negative) ai.top_negative = ti;
        }
        out.push_back(std::move(ai));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline void write_utility_report_txt(const std::vector<UtilityExpression>& exprs,
                                     const std::string& path, int digits = 3) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write '" + path + "'");
    for (const auto& e : exprs) out << render_utility_line(e, digits) << '\n';
    if (!out) throw io_error("write failed for '" + path + "'");
}

inline nlohmann::json utilities_to_json(const std::vector<UtilityExpression>& exprs) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : exprs) {
        nlohmann::json je;
        je["alt"] = e.alt_name;
        je["constant"] = e.constant;
        je["rendered"] = render_expression(e, 17);
        nlohmann::json terms = nlohmann::json::array();
        for (const auto& t : e.terms)
            terms.push_back({{"coefficient", t.coefficient},
                             {"exponents", t.exponents},
                             {"factors", render_factors(t, e.feature_names)}});
        je["terms"] = terms;
        je["feature_names"] = e.feature_names;
        arr.push_back(std::move(je));
    }
    return arr;
}

inline void write_utility_report_json(const std::vector<UtilityExpression>& exprs,
                                      const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write '" + path + "'");
    out << utilities_to_json(exprs).dump(2) << '\n';
    if (!out) throw io_error("write failed for '" + path + "'");
}

inline void write_influence_csv(const std::vector<AlternativeInfluence>& ranking,
                                const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write '" + path + "'");
    out << "alt,term,coefficient,mean_value,influence,sign\n";
    char buf[32];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (const auto& ai : ranking) {
        if (ai.constant_only) {
            out << ai.alt_name << ",const,,,,\n";
            continue;
        }
        for (const auto& ti : ai.terms)
            out << ai.alt_name << ',' << ti.term << ',' << num(ti.coefficient) << ','
                << num(ti.mean_term_value) << ',' << num(ti.influence) << ','
                << (ti.sign > 0 ? "positive" : (ti.sign < 0 ? "negative" : "zero")) << '\n';
    }
    if (!out) throw io_error("write failed for '" + path + "'");
}

} // namespace diffdcm
