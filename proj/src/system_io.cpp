#include "nds/system_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace nds {

namespace {

using nlohmann::json;

struct Context {
    const std::string& text;

    int line_of_offset(std::size_t offset) const {
        int line = 1;
        for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
            if (text[i] == '\n') ++line;
        }
        return line;
    }

    int line_of_key(const std::string& key) const {
        const auto pos = text.find('"' + key + '"');
        return pos == std::string::npos ? 1 : line_of_offset(pos);
    }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        throw Error(ErrorKind::Parse, "system", "line " + std::to_string(line_of_key(key)) + ": " + key + ": " + what);
    }
};

cplx parse_entry(const Context& ctx, const std::string& key, const json& v) {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
        return {v[0].get<double>(), v[1].get<double>()};
    }
    ctx.fail(key, "entries must be numbers or [re, im] pairs");
}

CMatrix parse_matrix(const Context& ctx, const std::string& key, const json& v, Eigen::Index rows, Eigen::Index cols) {
    if (!v.is_array() || static_cast<Eigen::Index>(v.size()) != rows) {
        ctx.fail(key, "expected " + std::to_string(rows) + " rows");
    }
    CMatrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const json& row = v[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            ctx.fail(key, "row " + std::to_string(i) + " must have " + std::to_string(cols) + " entries");
        }
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = parse_entry(ctx, key, row[static_cast<std::size_t>(j)]);
    }
    return m;
}

std::vector<CMatrix> parse_polynomial(const Context& ctx, const json& doc, const std::string& key, Eigen::Index n) {
    std::vector<CMatrix> out;
    if (!doc.contains(key)) return out;
    const json& v = doc[key];
    if (!v.is_array()) ctx.fail(key, "expected a list of coefficient matrices");
    for (const auto& c : v) out.push_back(parse_matrix(ctx, key, c, n, n));
    return out;
}

void add_into(std::vector<CMatrix>& acc, const std::vector<CMatrix>& extra) {
    if (acc.size() < extra.size()) {
        const Eigen::Index n = extra.front().rows();
        acc.resize(extra.size(), CMatrix::Zero(n, n));
    }
    for (std::size_t i = 0; i < extra.size(); ++i) acc[i] += extra[i];
}

void write_matrix(std::ostream& os, const CMatrix& m) {
    os << '[';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        os << (i ? ", [" : "[");
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) os << ", ";
            if (m(i, j).imag() == 0.0) {
                os << m(i, j).real();
            } else {
                os << '[' << m(i, j).real() << ", " << m(i, j).imag() << ']';
            }
        }
        os << ']';
    }
    os << ']';
}

}  // namespace

NeutralSystem parse_system(const std::string& text) {
    const Context ctx{text};
    json doc;
    try {
        doc = json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        const std::string msg = e.what();
        throw Error(ErrorKind::Parse, "system", "line " + std::to_string(ctx.line_of_offset(e.byte > 0 ? e.byte - 1 : 0)) +
                                                    ": malformed JSON (" + msg.substr(msg.find(':') + 2) + ")");
    }
    if (!doc.is_object()) throw Error(ErrorKind::Parse, "system", "line 1: top level must be an object");
    static const char* known[] = {"n", "p", "a_minus1", "a0", "a2", "a3", "b", "name", "comment"};
    for (const auto& item : doc.items()) {
        if (std::find(std::begin(known), std::end(known), item.key()) == std::end(known)) {
            ctx.fail(item.key(), "unknown key");
        }
    }
    if (!doc.contains("n") || !doc["n"].is_number_integer() || doc["n"].get<long>() < 1 || doc["n"].get<long>() > 32) {
        ctx.fail("n", "required integer in [1, 32]");
    }
    const auto n = static_cast<Eigen::Index>(doc["n"].get<long>());
    Eigen::Index p = 0;
    if (doc.contains("p")) {
        if (!doc["p"].is_number_integer() || doc["p"].get<long>() < 0) ctx.fail("p", "must be a non-negative integer");
        p = static_cast<Eigen::Index>(doc["p"].get<long>());
    } else if (doc.contains("b") && doc["b"].is_array() && !doc["b"].empty() && doc["b"][0].is_array()) {
        p = static_cast<Eigen::Index>(doc["b"][0].size());
    }
    if (!doc.contains("a_minus1")) ctx.fail("a_minus1", "required");
    const CMatrix am1 = parse_matrix(ctx, "a_minus1", doc["a_minus1"], n, n);
    auto a2 = parse_polynomial(ctx, doc, "a2", n);
    auto a3 = parse_polynomial(ctx, doc, "a3", n);
    if (doc.contains("a0")) {
        const auto [l2, l3] = lift_pointwise_delay(parse_matrix(ctx, "a0", doc["a0"], n, n));
        add_into(a2, l2.coefficients());
        add_into(a3, l3.coefficients());
    }
    CMatrix b = CMatrix::Zero(n, p);
    if (doc.contains("b")) b = parse_matrix(ctx, "b", doc["b"], n, p);
    try {
        return NeutralSystem(am1, MatrixPolynomial(a2), MatrixPolynomial(a3), b);
    } catch (const Error& e) {
        throw Error(ErrorKind::Parse, "system", std::string("invalid system: ") + e.what());
    }
}

NeutralSystem load_system(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::InvalidInput, "system", "file not found: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_system(ss.str());
    } catch (const Error& e) {
        throw Error(e.kind(), "system", path + ": " + std::string(e.what()).substr(8));
    }
}

std::string format_system(const NeutralSystem& sys) {
    std::ostringstream os;
    os.precision(17);
    os << "{\n  \"n\": " << sys.n() << ",\n  \"p\": " << sys.p() << ",\n  \"a_minus1\": ";
    write_matrix(os, sys.a_minus1());
    for (const auto& [key, poly] : {std::pair{"a2", &sys.a2()}, std::pair{"a3", &sys.a3()}}) {
        os << ",\n  \"" << key << "\": [";
        bool first = true;
        for (const auto& c : poly->coefficients()) {
            os << (first ? "" : ", ");
            first = false;
            write_matrix(os, c);
        }
        os << ']';
    }
    if (sys.p() > 0) {
        os << ",\n  \"b\": ";
        write_matrix(os, sys.b());
    }
    os << "\n}\n";
    return os.str();
}

History load_history(const std::string& path, Eigen::Index n, int grid_m) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::InvalidInput, "system", "file not found: " + path);
    History hist{CMatrix::Zero(n, grid_m + 1), CMatrix::Zero(n, grid_m + 1)};
    const auto cols = static_cast<std::size_t>(1 + 4 * n);
    std::string line;
    int line_no = 0;
    int row = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> vals;
        std::stringstream ss(line);
        std::string cell;
        bool numeric = true;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                vals.push_back(std::stod(cell, &used));
            } catch (const std::exception&) {
                numeric = false;
                break;
            }
        }
        auto fail = [&](const std::string& what) {
            throw Error(ErrorKind::Parse, "system", path + ": line " + std::to_string(line_no) + ": " + what);
        };
        if (!numeric) {
            if (row == 0) continue;
            fail("non-numeric entry");
        }
        if (vals.size() != cols) fail("expected " + std::to_string(cols) + " columns");
        if (row > grid_m) fail("more than M + 1 rows");
        const double theta = -1.0 + static_cast<double>(row) / grid_m;
        if (std::abs(vals[0] - theta) > 1e-9) fail("theta does not match the grid of step 1/M");
        for (Eigen::Index c = 0; c < n; ++c) {
            const auto k = static_cast<std::size_t>(2 * c);
            hist.z(c, row) = cplx(vals[1 + k], vals[2 + k]);
            hist.dz(c, row) = cplx(vals[1 + 2 * n + k], vals[2 + 2 * n + k]);
        }
        ++row;
    }
    if (row != grid_m + 1) {
        throw Error(ErrorKind::Parse, "system", path + ": expected " + std::to_string(grid_m + 1) + " rows, found " + std::to_string(row));
    }
    return hist;
}

}  // namespace nds
