#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace darkforge {

/// Dense N-C-H-W tensor of 64-bit floats, row-major.
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_),
          data(static_cast<std::size_t>(n_) * c_ * h_ * w_, 0.0) {}

    std::size_t size() const { return data.size(); }

    double& at(int in, int ic, int ih, int iw) {
        return data[((static_cast<std::size_t>(in) * c + ic) * h + ih) * w + iw];
    }
    double at(int in, int ic, int ih, int iw) const {
        return data[((static_cast<std::size_t>(in) * c + ic) * h + ih) * w + iw];
    }

    bool same_shape(const Tensor& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }
};

/// Golden tensor file: one ASCII header line "f64 <ndim> <d0> <d1> ..."
/// followed by little-endian IEEE-754 doubles in row-major order.
inline void write_golden(const std::string& path, const std::vector<int>& dims,
                         const std::vector<double>& values) {
    std::size_t expect = 1;
    for (int d : dims) expect *= static_cast<std::size_t>(d);
    if (expect != values.size()) throw std::invalid_argument("write_golden: dims/data mismatch");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_golden: cannot open " + path);
    f << "f64 " << dims.size();
    for (int d : dims) f << ' ' << d;
    f << '\n';
    f.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
}

inline std::vector<double> read_golden(const std::string& path, std::vector<int>& dims_out) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_golden: cannot open " + path);
    std::string header;
    std::getline(f, header);
    std::istringstream hs(header);
    std::string tag;
    std::size_t ndim = 0;
    hs >> tag >> ndim;
    if (tag != "f64") throw std::runtime_error("read_golden: bad header in " + path);
    dims_out.clear();
    std::size_t count = 1;
    for (std::size_t i = 0; i < ndim; ++i) {
        int d;
        hs >> d;
        dims_out.push_back(d);
        count *= static_cast<std::size_t>(d);
    }
    std::vector<double> values(count);
    f.read(reinterpret_cast<char*>(values.data()),
           static_cast<std::streamsize>(count * sizeof(double)));
    if (!f) throw std::runtime_error("read_golden: truncated data in " + path);
    return values;
}

inline void write_golden_tensor(const std::string& path, const Tensor& t) {
    write_golden(path, {t.n, t.c, t.h, t.w}, t.data);
}

inline Tensor read_golden_tensor(const std::string& path) {
    std::vector<int> dims;
    std::vector<double> values = read_golden(path, dims);
    if (dims.size() != 4) throw std::runtime_error("read_golden_tensor: expected 4 dims");
    Tensor t(dims[0], dims[1], dims[2], dims[3]);
    t.data = std::move(values);
    return t;
}

}  // namespace darkforge
