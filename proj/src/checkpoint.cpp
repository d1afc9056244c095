#include "stg3net/io.hpp"
#include "stg3net/model.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace stg3net {

namespace {

constexpr const char* kMagic = "# stg3net checkpoint v1";

void write_array(std::string& out, const ad::Parameter& p) {
    out += p.name + " " + std::to_string(p.value.rows()) + " " + std::to_string(p.value.cols()) + "\n";
    for (Index i = 0; i < p.value.rows(); ++i) {
        for (Index j = 0; j < p.value.cols(); ++j) {
            if (j) {
                out += ' ';
            }
            out += io::format_double(p.value(i, j));
        }
        out += '\n';
    }
}

std::map<std::string, Matrix> read_arrays(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open checkpoint: " + path.string());
    }
    std::string line;
    if (!std::getline(in, line) || line != kMagic) {
        throw DataError(path.string() + ": not a checkpoint file");
    }
    std::map<std::string, Matrix> arrays;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::istringstream head(line);
        std::string name;
        Index rows = 0, cols = 0;
        if (!(head >> name >> rows >> cols) || rows < 0 || cols < 0) {
            throw DataError(path.string() + ": malformed array header '" + line + "'");
        }
        Matrix m(rows, cols);
        for (Index i = 0; i < rows; ++i) {
            if (!std::getline(in, line)) {
                throw DataError(path.string() + ": truncated array " + name);
            }
            std::istringstream row(line);
            std::string cell;
            for (Index j = 0; j < cols; ++j) {
                if (!(row >> cell)) {
                    throw DataError(path.string() + ": short row in array " + name);
                }
                m(i, j) = io::parse_double(cell, path, static_cast<std::size_t>(i));
            }
        }
        arrays.emplace(name, std::move(m));
    }
    return arrays;
}

}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params, bool include_discriminator) {
    std::string out = std::string(kMagic) + "\n";
    for (auto* a : params.generator()) {
        write_array(out, *a);
    }
    if (include_discriminator) {
        for (auto* a : params.discriminator()) {
            write_array(out, *a);
        }
    }
    io::write_text(path, out);
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
    auto arrays = read_arrays(path);
    ModelParams params;
    auto fill = [&](ad::Parameter* p, const char* name, bool required) {
        auto it = arrays.find(name);
        if (it == arrays.end()) {
            if (required) {
                throw DataError(path.string() + ": missing array " + name);
            }
            *p = ad::Parameter(name, Matrix());
            return;
        }
        *p = ad::Parameter(name, it->second);
    };
    const char* gen_names[] = {"mask_token", "enc_w1", "enc_b1", "enc_w2", "enc_b2", "gcn_w0", "gcn_w1", "dec_w0", "dec_w1"};
    const char* disc_names[] = {"disc_w1", "disc_b1", "disc_w2", "disc_b2", "disc_w3", "disc_b3"};
    auto gen = params.generator();
    for (std::size_t i = 0; i < gen.size(); ++i) {
        fill(gen[i], gen_names[i], true);
    }
    auto disc = params.discriminator();
    for (std::size_t i = 0; i < disc.size(); ++i) {
        fill(disc[i], disc_names[i], false);
    }
    return params;
}

bool checkpoint_has_discriminator(const std::filesystem::path& path) {
    auto arrays = read_arrays(path);
    return arrays.count("disc_w1") > 0;
}

}
