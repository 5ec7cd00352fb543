#include "microharvest/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace mh {

ImageF to_float(const ImageU8& img) {
    ImageF out(img.width(), img.height());
    for (size_t i = 0; i < img.size(); ++i)
        out[i] = static_cast<float>(img[i]) / 255.0f;
    return out;
}

ImageU8 to_u8(const ImageF& img) {
    ImageU8 out(img.width(), img.height());
    for (size_t i = 0; i < img.size(); ++i) {
        const float v = std::clamp(img[i], 0.0f, 1.0f);
        out[i] = static_cast<uint8_t>(std::lround(v * 255.0f));
    }
    return out;
}

void save_pgm(const ImageU8& img, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os << "P5\n" << img.width() << " " << img.height() << "\n255\n";
    os.write(reinterpret_cast<const char*>(img.data().data()),
             static_cast<std::streamsize>(img.size()));
    if (!os) throw std::runtime_error("failed writing: " + path);
}

namespace {
int next_pgm_token(std::istream& is) {
    // skips whitespace and '#' comments
    for (;;) {
        int c = is.peek();
        if (c == '#') {
            std::string line;
            std::getline(is, line);
        } else if (std::isspace(c)) {
            is.get();
        } else {
            break;
        }
    }
    int v = 0;
    is >> v;
    return v;
}
}  // namespace

ImageU8 load_pgm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    std::string magic;
    is >> magic;
    if (magic != "P5" && magic != "P2")
        throw std::runtime_error("not a PGM file: " + path);
    const int w = next_pgm_token(is);
    const int h = next_pgm_token(is);
    const int maxval = next_pgm_token(is);
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255)
        throw std::runtime_error("unsupported PGM header in: " + path);
    ImageU8 img(w, h);
    if (magic == "P5") {
        is.get();  // single whitespace after maxval
        is.read(reinterpret_cast<char*>(img.data().data()),
                static_cast<std::streamsize>(img.size()));
        if (is.gcount() != static_cast<std::streamsize>(img.size()))
            throw std::runtime_error("truncated PGM: " + path);
    } else {
        for (size_t i = 0; i < img.size(); ++i) {
            int v = 0;
            is >> v;
            if (!is) throw std::runtime_error("truncated PGM: " + path);
            img[i] = static_cast<uint8_t>(v);
        }
    }
    return img;
}

}  // namespace mh
