#pragma once
// File formats: set files (`# N=<n>` header + one element per line),
// function CSVs (`index,real,imag`), lattice files (`d=<dim>` + basis rows),
// partition certificates, and decomposition trace CSVs.

#include <fstream>
#include <iomanip>
#include <sstream>

#include "ap4/linearise.hpp"
#include "ap4/structure.hpp"

namespace ap4 {

struct SetFile {
    int64_t N = 0;
    std::vector<int64_t> elements;
};

inline SetFile parse_set_stream(std::istream& in, const std::string& name) {
    SetFile out;
    std::string line;
    int lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        size_t a = line.find_first_not_of(" \t\r");
        if (a == std::string::npos) continue;
        size_t b = line.find_last_not_of(" \t\r");
        std::string body = line.substr(a, b - a + 1);
        if (!have_header) {
            if (body.rfind("# N=", 0) != 0)
                throw std::invalid_argument(name + ":" + std::to_string(lineno) +
                                            ": expected header '# N=<integer>'");
            try {
                out.N = std::stoll(body.substr(4));
            } catch (...) {
                throw std::invalid_argument(name + ":" + std::to_string(lineno) + ": bad N value");
            }
            if (out.N < 1)
                throw std::invalid_argument(name + ":" + std::to_string(lineno) + ": N must be >= 1");
            have_header = true;
            continue;
        }
        if (body[0] == '#') continue;
        try {
            size_t used = 0;
            int64_t v = std::stoll(body, &used);
            if (used != body.size()) throw std::invalid_argument("trailing");
            out.elements.push_back(v);
        } catch (...) {
            throw std::invalid_argument(name + ":" + std::to_string(lineno) + ": bad element '" +
                                        body + "'");
        }
    }
    if (!have_header) throw std::invalid_argument(name + ": missing '# N=' header");
    std::sort(out.elements.begin(), out.elements.end());
    out.elements.erase(std::unique(out.elements.begin(), out.elements.end()), out.elements.end());
    return out;
}

inline SetFile read_set_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open set file: " + path);
    return parse_set_stream(in, path);
}

inline void write_set_file(std::ostream& out, int64_t N, const std::vector<int64_t>& elements) {
    out << "# N=" << N << "\n";
    for (int64_t e : elements) out << e << "\n";
}

inline void write_set_file(const std::string& path, int64_t N, const std::vector<int64_t>& elements) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot open for writing: " + path);
    write_set_file(out, N, elements);
}

inline CyclicFunction parse_function_stream(std::istream& in, const std::string& name) {
    std::vector<cd> vals;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t a = line.find_first_not_of(" \t\r");
        if (a == std::string::npos) continue;
        if (line[a] == '#') continue;
        std::istringstream row(line);
        std::string tok;
        int64_t idx;
        double re, im;
        try {
            if (!std::getline(row, tok, ',')) throw std::invalid_argument("idx");
            idx = std::stoll(tok);
            if (!std::getline(row, tok, ',')) throw std::invalid_argument("re");
            re = std::stod(tok);
            if (!std::getline(row, tok, ',')) throw std::invalid_argument("im");
            im = std::stod(tok);
        } catch (...) {
            throw std::invalid_argument(name + ":" + std::to_string(lineno) +
                                        ": bad row (want index,real,imag)");
        }
        if (idx != static_cast<int64_t>(vals.size()))
            throw std::invalid_argument(name + ":" + std::to_string(lineno) +
                                        ": indices must be consecutive from 0");
        vals.emplace_back(re, im);
    }
    Modulus m(static_cast<int64_t>(vals.size()));
    return CyclicFunction(m, std::move(vals));
}

inline CyclicFunction read_function_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open function file: " + path);
    return parse_function_stream(in, path);
}

inline void write_function_file(std::ostream& out, const CyclicFunction& f) {
    out << std::setprecision(17);
    for (int64_t x = 0; x < f.p; ++x) {
        const cd& z = f.v[static_cast<size_t>(x)];
        out << x << "," << z.real() << "," << z.imag() << "\n";
    }
}

inline void write_function_file(const std::string& path, const CyclicFunction& f) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot open for writing: " + path);
    write_function_file(out, f);
}

inline Lattice parse_lattice_stream(std::istream& in, const std::string& name) {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument(name + ": empty lattice file");
    size_t a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos || line.compare(a, 2, "d=") != 0)
        throw std::invalid_argument(name + ":1: expected 'd=<dim>'");
    int d = 0;
    try {
        d = std::stoi(line.substr(a + 2));
    } catch (...) {
        throw std::invalid_argument(name + ":1: bad dimension");
    }
    std::vector<double> entries;
    int lineno = 1;
    while (std::getline(in, line) && static_cast<int>(entries.size()) < d * d) {
        ++lineno;
        std::istringstream row(line);
        double v;
        while (row >> v) entries.push_back(v);
    }
    if (static_cast<int>(entries.size()) != d * d)
        throw std::invalid_argument(name + ": expected " + std::to_string(d * d) +
                                    " basis entries, got " + std::to_string(entries.size()));
    return make_lattice(d, entries);
}

inline Lattice read_lattice_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open lattice file: " + path);
    return parse_lattice_stream(in, path);
}

inline void write_lattice_file(std::ostream& out, const Lattice& L) {
    out << "d=" << L.d << "\n" << std::setprecision(17);
    for (int i = 0; i < L.d; ++i) {
        for (int j = 0; j < L.d; ++j) out << (j ? " " : "") << L.basis.at(i, j);
        out << "\n";
    }
}

// Certificate serialization: `target-size <n>` then `piece start step length`
// lines; bit-exact round trip.
inline void write_certificate(std::ostream& out, const PartitionCertificate& cert) {
    out << "target-size " << cert.target.size() << "\n";
    for (const auto& piece : cert.pieces)
        out << "piece " << piece.start << " " << piece.step << " " << piece.length << "\n";
}

struct LoadedCertificate {
    int64_t target_size = 0;
    std::vector<APPiece> pieces;
};

inline LoadedCertificate parse_certificate_stream(std::istream& in, const std::string& name) {
    LoadedCertificate out;
    std::string word;
    if (!(in >> word) || word != "target-size")
        throw std::invalid_argument(name + ": expected 'target-size'");
    if (!(in >> out.target_size)) throw std::invalid_argument(name + ": bad target size");
    while (in >> word) {
        if (word != "piece") throw std::invalid_argument(name + ": expected 'piece'");
        APPiece piece;
        if (!(in >> piece.start >> piece.step >> piece.length))
            throw std::invalid_argument(name + ": bad piece line");
        out.pieces.push_back(piece);
    }
    return out;
}

// On-load revalidation: pieces disjoint with distinct elements, total size
// matching the recorded target size.
inline bool revalidate_loaded_certificate(const LoadedCertificate& cert, int64_t p) {
    PartitionCertificate full;
    full.p = p;
    full.pieces = cert.pieces;
    int64_t total = 0;
    for (const auto& piece : cert.pieces) total += piece.length;
    if (total != cert.target_size) return false;
    for (const auto& piece : cert.pieces)
        for (int64_t x : piece.elements(p)) full.target.push_back(x);
    std::sort(full.target.begin(), full.target.end());
    return validate_partition(full);
}

inline void write_trace_csv(std::ostream& out, const DecompositionTrace& trace) {
    out << "iter,energy_before,energy_after,u3_residual,correlation\n";
    out << std::setprecision(12);
    for (size_t i = 0; i < trace.iterations.size(); ++i) {
        const KvnIteration& it = trace.iterations[i];
        out << i << "," << it.energy_before << "," << it.energy_after << "," << it.u3_residual
            << "," << it.correlation << "\n";
    }
}

}  // namespace ap4
