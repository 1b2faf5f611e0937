#include "lusd/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "lusd/error.hpp"

namespace lusd {

namespace {

std::uint8_t to_byte(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

std::string lower_ext(const std::filesystem::path& p) {
    std::string e = p.extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
    return e;
}

GridTensor from_interleaved(const std::vector<std::uint8_t>& rgb, std::size_t w, std::size_t h) {
    GridTensor img(Shape{3, h, w});
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            for (std::size_t c = 0; c < 3; ++c) {
                img.at(c, y, x) = rgb[(y * w + x) * 3 + c] / 255.0f;
            }
        }
    }
    return img;
}

std::vector<std::uint8_t> to_interleaved(const GridTensor& image) {
    const Shape& s = image.shape();
    std::vector<std::uint8_t> rgb(s.height * s.width * 3);
    for (std::size_t y = 0; y < s.height; ++y) {
        for (std::size_t x = 0; x < s.width; ++x) {
            for (std::size_t c = 0; c < 3; ++c) rgb[(y * s.width + x) * 3 + c] = to_byte(image.at(c, y, x));
        }
    }
    return rgb;
}

// Reads the next whitespace-separated header token, skipping '#' comments.
std::string pnm_token(std::istream& in) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {}
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(ch));
    }
    return tok;
}

GridTensor read_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    if (pnm_token(in) != "P6") throw IoError(path.string() + ": only binary PPM (P6) is supported");
    std::size_t w = 0, h = 0, maxval = 0;
    try {
        w = std::stoul(pnm_token(in));
        h = std::stoul(pnm_token(in));
        maxval = std::stoul(pnm_token(in));
    } catch (const std::exception&) {
        throw IoError(path.string() + ": malformed PPM header");
    }
    if (w == 0 || h == 0 || maxval != 255) throw IoError(path.string() + ": unsupported PPM header");
    std::vector<std::uint8_t> rgb(w * h * 3);
    in.read(reinterpret_cast<char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
    if (in.gcount() != static_cast<std::streamsize>(rgb.size())) throw IoError(path.string() + ": truncated PPM");
    return from_interleaved(rgb, w, h);
}

GridTensor read_png(const std::filesystem::path& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
        throw IoError(path.string() + ": " + image.message);
    }
    image.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> rgb(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, rgb.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw IoError(path.string() + ": " + msg);
    }
    return from_interleaved(rgb, image.width, image.height);
}

}  // namespace

GridTensor read_image(const std::filesystem::path& path) {
    const std::string ext = lower_ext(path);
    if (ext == ".ppm") return read_ppm(path);
    if (ext == ".png") return read_png(path);
    throw IoError(path.string() + ": unsupported image format (expected .png or .ppm)");
}

void write_image(const std::filesystem::path& path, const GridTensor& image) {
    const Shape& s = image.shape();
    if (s.channels != 3 || s.height == 0 || s.width == 0) {
        throw IoError("write_image: expected a (3, H, W) tensor, got " + s.str());
    }
    const std::vector<std::uint8_t> rgb = to_interleaved(image);
    const std::string ext = lower_ext(path);
    if (ext == ".png") {
        png_image out{};
        out.version = PNG_IMAGE_VERSION;
        out.width = static_cast<png_uint_32>(s.width);
        out.height = static_cast<png_uint_32>(s.height);
        out.format = PNG_FORMAT_RGB;
        if (!png_image_write_to_file(&out, path.string().c_str(), 0, rgb.data(), 0, nullptr)) {
            throw IoError(path.string() + ": " + out.message);
        }
        return;
    }
    if (ext == ".ppm") {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw IoError("cannot write " + path.string());
        f << "P6\n" << s.width << " " << s.height << "\n255\n";
        f.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
        if (!f) throw IoError("failed writing " + path.string());
        return;
    }
    throw IoError(path.string() + ": unsupported image format (expected .png or .ppm)");
}

void write_pgm(const std::filesystem::path& path, const Map2D& map) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    f << "P5\n" << map.width << " " << map.height << "\n255\n";
    std::vector<std::uint8_t> bytes(map.size());
    for (std::size_t i = 0; i < map.size(); ++i) bytes[i] = to_byte(map.values[i]);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("failed writing " + path.string());
}

}  // namespace lusd
