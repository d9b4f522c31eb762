#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "lipsysid/networks.hpp"

// Flat text model container. Doubles are written as C hexfloats so a
// round-trip reproduces the exact bit pattern.

namespace lipsysid {

namespace {

constexpr const char* kMagic = "lipsysid-model";
constexpr int kFormatVersion = 1;

void write_double(std::ostream& os, double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%a", x);
    os << buf << '\n';
}

double read_double(std::istream& is) {
    std::string tok;
    if (!(is >> tok)) throw std::runtime_error("model file: truncated");
    return std::strtod(tok.c_str(), nullptr);
}

void write_matrix(std::ostream& os, const Matrix& m) {
    os << m.rows() << ' ' << m.cols() << '\n';
    for (size_t i = 0; i < m.size(); ++i) write_double(os, m.data()[i]);
}

Matrix read_matrix(std::istream& is) {
    int rows, cols;
    if (!(is >> rows >> cols)) throw std::runtime_error("model file: bad matrix header");
    Matrix m(rows, cols);
    for (size_t i = 0; i < m.size(); ++i) m.data()[i] = read_double(is);
    return m;
}

void write_vector(std::ostream& os, const Vector& v) {
    os << v.size() << '\n';
    for (double x : v) write_double(os, x);
}

Vector read_vector(std::istream& is) {
    size_t n;
    if (!(is >> n)) throw std::runtime_error("model file: bad vector header");
    Vector v(n);
    for (double& x : v) x = read_double(is);
    return v;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write model file: " + path);
    return os;
}

std::ifstream open_in(const std::string& path, std::string expected_kind) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read model file: " + path);
    std::string magic, kind;
    int version;
    is >> magic >> version >> kind;
    if (magic != kMagic || version != kFormatVersion)
        throw std::runtime_error("unrecognized model file format: " + path);
    if (kind != expected_kind)
        throw std::runtime_error("model file " + path + " holds a '" + kind + "' model, expected '" +
                                 expected_kind + "'");
    return is;
}

const char* activation_name(Activation a) {
    return a == Activation::ReLU ? "relu" : "leakyrelu";
}

Activation activation_from_name(const std::string& s) {
    if (s == "relu") return Activation::ReLU;
    if (s == "leakyrelu") return Activation::LeakyReLU;
    throw std::runtime_error("unknown activation in model file: " + s);
}

}  // namespace

void save_lipschitz_net(const LipschitzNet& net, const std::string& path) {
    std::ofstream os = open_out(path);
    os << kMagic << ' ' << kFormatVersion << " lipnet\n";
    os << activation_name(net.activation) << '\n';
    write_double(os, net.gamma_prime);
    write_vector(os, net.normalizer.scale);
    write_vector(os, net.normalizer.mean);
    os << net.hidden.size() << '\n';
    for (const auto& layer : net.hidden) {
        write_matrix(os, layer.x);
        write_matrix(os, layer.y);
        write_matrix(os, layer.v);
        write_matrix(os, layer.b);
    }
    write_matrix(os, net.final_x);
    write_matrix(os, net.final_y);
}

LipschitzNet load_lipschitz_net(const std::string& path) {
    std::ifstream is = open_in(path, "lipnet");
    LipschitzNet net;
    std::string act;
    is >> act;
    net.activation = activation_from_name(act);
    net.gamma_prime = read_double(is);
    net.normalizer.scale = read_vector(is);
    net.normalizer.mean = read_vector(is);
    size_t layers;
    is >> layers;
    for (size_t l = 0; l < layers; ++l) {
        SandwichLayerParams p;
        p.x = read_matrix(is);
        p.y = read_matrix(is);
        p.v = read_matrix(is);
        p.b = read_matrix(is);
        net.hidden.push_back(std::move(p));
    }
    net.final_x = read_matrix(is);
    net.final_y = read_matrix(is);
    return net;
}

void save_mlp(const MlpBaseline& net, const std::string& path) {
    std::ofstream os = open_out(path);
    os << kMagic << ' ' << kFormatVersion << " mlp\n";
    os << activation_name(net.activation) << '\n';
    os << net.layers.size() << '\n';
    for (const auto& layer : net.layers) {
        write_matrix(os, layer.w);
        write_matrix(os, layer.b);
    }
}

MlpBaseline load_mlp(const std::string& path) {
    std::ifstream is = open_in(path, "mlp");
    MlpBaseline net;
    std::string act;
    is >> act;
    net.activation = activation_from_name(act);
    size_t layers;
    is >> layers;
    for (size_t l = 0; l < layers; ++l) {
        MlpBaseline::Layer layer;
        layer.w = read_matrix(is);
        layer.b = read_matrix(is);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

std::string model_kind(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read model file: " + path);
    std::string magic, kind;
    int version;
    is >> magic >> version >> kind;
    if (magic != kMagic) throw std::runtime_error("unrecognized model file format: " + path);
    return kind;
}

}  // namespace lipsysid
