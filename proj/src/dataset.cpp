#include "lipsysid/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lipsysid {

std::vector<Vector> Dataset::inputs() const {
    std::vector<Vector> xs;
    xs.reserve(samples.size());
    for (const Sample& s : samples) xs.push_back(s.x);
    return xs;
}

Dataset build_dataset(const std::vector<Trajectory>& trajectories, const SystemSpec& sys,
                      int filter_window) {
    Dataset d;
    d.meta.system = sys.name();
    d.meta.filter_window = filter_window;

    // Samples whose difference stencil touches the filter's shrinking edge
    // region carry a large systematic error; drop half-width + 2 per end so
    // every retained label is built from fully filtered values.
    const int margin = filter_window / 2 + 2;

    int traj_id = 0;
    for (const Trajectory& traj : trajectories) {
        if (static_cast<int>(traj.t.size()) < 2 * margin + 1)
            throw std::invalid_argument("build_dataset: trajectory shorter than the stencil");
        const double dt = traj.t[1] - traj.t[0];
        const std::vector<Vector>& meas = traj.noisy.empty() ? traj.clean : traj.noisy;
        const std::vector<Vector> filtered = lowpass_filter(meas, filter_window);
        const std::vector<Vector> deriv = central_diff4(filtered, dt);
        const int n = static_cast<int>(filtered.size());

        for (int i = margin; i < n - margin; ++i) {
            Sample s;
            s.t = traj.t[i];
            s.traj_id = traj_id;
            s.x = filtered[i];
            if (sys.kind == SystemKind::TwoLinkArm) {
                const Vector q{s.x[0], s.x[1]};
                const Vector qd{s.x[2], s.x[3]};
                const Vector& tau = traj.torques[i];
                const Vector cq = matvec(arm_coriolis(sys.arm, q, qd), qd);
                const Vector grav = arm_gravity(sys.arm, q);
                Vector rhs(2);
                for (int k = 0; k < 2; ++k) rhs[k] = tau[k] - cq[k] - grav[k];
                const Matrix nominal = solve(arm_inertia(sys.arm, q), Matrix::from_column(rhs));
                // Estimated acceleration: derivative of the filtered qd channel.
                s.y = {nominal(0, 0) - deriv[i][2], nominal(1, 0) - deriv[i][3]};
            } else {
                s.y = deriv[i];
            }
            d.samples.push_back(std::move(s));
        }
        ++traj_id;
    }
    return d;
}

namespace {

void write_hex(std::ostream& os, double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%a", x);
    os << buf;
}

double parse_hex(const std::string& tok) { return std::strtod(tok.c_str(), nullptr); }

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(tok);
    return out;
}

}  // namespace

void save_dataset(const Dataset& d, const std::string& csv_path, const std::string& meta_path) {
    std::ofstream os(csv_path);
    if (!os) throw std::runtime_error("cannot write dataset: " + csv_path);
    const int n = d.input_dim();
    const int k = d.output_dim();
    os << "traj_id,t";
    for (int i = 1; i <= n; ++i) os << ",x" << i;
    for (int i = 1; i <= k; ++i) os << ",y" << i;
    os << '\n';
    for (const Sample& s : d.samples) {
        os << s.traj_id << ',';
        write_hex(os, s.t);
        for (double x : s.x) {
            os << ',';
            write_hex(os, x);
        }
        for (double y : s.y) {
            os << ',';
            write_hex(os, y);
        }
        os << '\n';
    }

    std::ofstream ms(meta_path);
    if (!ms) throw std::runtime_error("cannot write dataset metadata: " + meta_path);
    ms << "system = " << d.meta.system << '\n';
    ms << "noise_variance = ";
    write_hex(ms, d.meta.noise_variance);
    ms << '\n';
    ms << "rate_hz = ";
    write_hex(ms, d.meta.rate_hz);
    ms << '\n';
    ms << "seed = " << d.meta.seed << '\n';
    ms << "filter_window = " << d.meta.filter_window << '\n';
}

Dataset load_dataset(const std::string& csv_path, const std::string& meta_path) {
    std::ifstream is(csv_path);
    if (!is) throw std::runtime_error("cannot read dataset: " + csv_path);
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("empty dataset file: " + csv_path);
    const std::vector<std::string> header = split_csv(line);
    int n = 0, k = 0;
    for (const std::string& h : header) {
        if (h.size() > 1 && h[0] == 'x') ++n;
        if (h.size() > 1 && h[0] == 'y') ++k;
    }
    if (n == 0 || k == 0) throw std::runtime_error("bad dataset header: " + csv_path);

    Dataset d;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const std::vector<std::string> f = split_csv(line);
        if (static_cast<int>(f.size()) != 2 + n + k)
            throw std::runtime_error("bad dataset row in " + csv_path);
        Sample s;
        s.traj_id = std::stoi(f[0]);
        s.t = parse_hex(f[1]);
        s.x.resize(n);
        s.y.resize(k);
        for (int i = 0; i < n; ++i) s.x[i] = parse_hex(f[2 + i]);
        for (int i = 0; i < k; ++i) s.y[i] = parse_hex(f[2 + n + i]);
        d.samples.push_back(std::move(s));
    }

    std::ifstream ms(meta_path);
    if (!ms) throw std::runtime_error("cannot read dataset metadata: " + meta_path);
    while (std::getline(ms, line)) {
        const size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        auto trim = [](std::string& s) {
            while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(0, 1);
            while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
        };
        trim(key);
        trim(val);
        if (key == "system") d.meta.system = val;
        else if (key == "noise_variance") d.meta.noise_variance = parse_hex(val);
        else if (key == "rate_hz") d.meta.rate_hz = parse_hex(val);
        else if (key == "seed") d.meta.seed = std::stoull(val);
        else if (key == "filter_window") d.meta.filter_window = std::stoi(val);
    }
    return d;
}

}  // namespace lipsysid
