#include "idcs/stability.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace idcs {

namespace {

constexpr char kMagic[8] = {'I', 'D', 'C', 'S', 'I', 'M', 'P', '1'};

static_assert(std::endian::native == std::endian::little, "importance files are written little-endian");

}  // namespace

ImportanceTensor::ImportanceTensor(std::string model_, std::string method_, std::vector<double> pis_,
                                   std::size_t n_instances_, std::size_t iterations_,
                                   std::vector<std::string> features_)
    : model(std::move(model_)),
      method(std::move(method_)),
      pis(std::move(pis_)),
      n_instances(n_instances_),
      iterations(iterations_),
      features(std::move(features_)),
      values(pis.size() * n_instances * iterations * features.size(), 0.0),
      present(pis.size() * iterations, 0) {}

Matrix ImportanceTensor::instance_matrix(std::size_t pi, std::size_t i) const {
    Matrix m(effective_iterations(pi), features.size());
    std::size_t row = 0;
    for (std::size_t j = 0; j < iterations; ++j) {
        if (!iteration_present(pi, j)) continue;
        for (std::size_t p = 0; p < features.size(); ++p) m(row, p) = at(pi, i, j, p);
        ++row;
    }
    return m;
}

std::size_t ImportanceTensor::effective_iterations(std::size_t pi) const noexcept {
    std::size_t n = 0;
    for (std::size_t j = 0; j < iterations; ++j) n += iteration_present(pi, j) ? 1 : 0;
    return n;
}

void ImportanceTensor::write(const std::filesystem::path& path) const {
    const nlohmann::json header{{"model", model},
                                {"method", method},
                                {"pis", pis},
                                {"n_instances", n_instances},
                                {"iterations", iterations},
                                {"features", features},
                                {"present", present}};
    const std::string text = header.dump();
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out.write(kMagic, sizeof kMagic);
        const std::uint64_t len = text.size();
        out.write(reinterpret_cast<const char*>(&len), sizeof len);
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
        if (!out) throw std::runtime_error("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

ImportanceTensor ImportanceTensor::read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    char magic[sizeof kMagic];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw std::runtime_error(path.string() + " is not an importance file");
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof len);
    if (!in || len > (1ULL << 30)) throw std::runtime_error(path.string() + ": corrupt header");
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    const auto header = nlohmann::json::parse(text);
    ImportanceTensor t(header.at("model").get<std::string>(), header.at("method").get<std::string>(),
                       header.at("pis").get<std::vector<double>>(), header.at("n_instances").get<std::size_t>(),
                       header.at("iterations").get<std::size_t>(),
                       header.at("features").get<std::vector<std::string>>());
    t.present = header.at("present").get<std::vector<unsigned char>>();
    if (t.present.size() != t.pis.size() * t.iterations) throw std::runtime_error(path.string() + ": corrupt header");
    in.read(reinterpret_cast<char*>(t.values.data()), static_cast<std::streamsize>(t.values.size() * sizeof(double)));
    if (!in) throw std::runtime_error(path.string() + ": truncated values");
    return t;
}

}  // namespace idcs
