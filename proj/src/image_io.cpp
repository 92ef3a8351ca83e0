#include "retina/image_io.hpp"

#include <png.h>

#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "retina/error.hpp"

namespace retina {

namespace {

std::string lower_ext(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    for (char& c : ext) c = char(std::tolower(static_cast<unsigned char>(c)));
    return ext;
}

// --- PGM -------------------------------------------------------------------

// Reads the next header token, skipping whitespace and '#' comments.
std::string pgm_token(std::istream& in, const std::string& path) {
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    if (c == EOF) fail(ErrorCode::format, path + ": truncated PGM header");
    std::string tok;
    while (c != EOF && !std::isspace(c)) {
        tok.push_back(char(c));
        c = in.get();
    }
    return tok;
}

long pgm_int(std::istream& in, const std::string& path) {
    std::string tok = pgm_token(in, path);
    try {
        size_t pos = 0;
        long v = std::stol(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        fail(ErrorCode::format, path + ": invalid PGM header token '" + tok + "'");
    }
}

Grid load_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io, "cannot open " + path.string());
    char magic[2] = {0, 0};
    in.read(magic, 2);
    const bool binary = magic[0] == 'P' && magic[1] == '5';
    const bool ascii = magic[0] == 'P' && magic[1] == '2';
    if (!binary && !ascii) fail(ErrorCode::format, path.string() + ": not a PGM file");
    const long width = pgm_int(in, path.string());
    const long height = pgm_int(in, path.string());
    const long maxval = pgm_int(in, path.string());
    if (width <= 0 || height <= 0)
        fail(ErrorCode::format, path.string() + ": zero-dimension image");
    if (maxval < 1 || maxval > 255)
        fail(ErrorCode::format,
             path.string() + ": unsupported PGM maxval " + std::to_string(maxval) +
                 " (8-bit only)");
    Grid g(height, width);
    if (binary) {
        // Header ends with exactly one whitespace byte (already consumed by
        // pgm_int's trailing-delimiter read).
        std::vector<std::uint8_t> row(static_cast<size_t>(width));
        for (long r = 0; r < height; ++r) {
            in.read(reinterpret_cast<char*>(row.data()), width);
            if (in.gcount() != width)
                fail(ErrorCode::format, path.string() + ": truncated PGM pixel data");
            for (long c = 0; c < width; ++c) g(r, c) = double(row[size_t(c)]) / 255.0;
        }
    } else {
        for (long r = 0; r < height; ++r)
            for (long c = 0; c < width; ++c) {
                const long v = pgm_int(in, path.string());
                if (v < 0 || v > maxval)
                    fail(ErrorCode::format, path.string() + ": PGM sample out of range");
                g(r, c) = double(v) / 255.0;
            }
    }
    return g;
}

void save_pgm(const GridView& map, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::io, "cannot write " + path.string());
    out << "P5\n" << map.cols() << " " << map.rows() << "\n255\n";
    std::vector<std::uint8_t> row(size_t(map.cols()));
    for (Eigen::Index r = 0; r < map.rows(); ++r) {
        for (Eigen::Index c = 0; c < map.cols(); ++c) row[size_t(c)] = quantize_byte(map(r, c));
        out.write(reinterpret_cast<const char*>(row.data()), Eigen::Index(row.size()));
    }
    if (!out) fail(ErrorCode::io, "write failed for " + path.string());
}

// --- PNG -------------------------------------------------------------------

struct FileCloser {
    void operator()(std::FILE* f) const noexcept {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

Grid load_png(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp) fail(ErrorCode::io, "cannot open " + path.string());

    png_byte header[8];
    if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8) != 0)
        fail(ErrorCode::format, path.string() + ": not a PNG file");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(ErrorCode::internal, "libpng allocation failure");
    }

    std::vector<png_byte> data;
    std::vector<png_bytep> rows;
    png_uint_32 width = 0, height = 0;
    int bit_depth = 0, color_type = 0;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(ErrorCode::format, path.string() + ": corrupt PNG data");
    }

    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    png_get_IHDR(png, info, &width, &height, &bit_depth, &color_type, nullptr, nullptr, nullptr);
    if (width == 0 || height == 0) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(ErrorCode::format, path.string() + ": zero-dimension image");
    }

    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_set_interlace_handling(png);
    png_read_update_info(png, info);

    bit_depth = png_get_bit_depth(png, info);
    color_type = png_get_color_type(png, info);
    const bool gray = color_type == PNG_COLOR_TYPE_GRAY;
    const bool rgb = color_type == PNG_COLOR_TYPE_RGB;
    if (!((gray && (bit_depth == 8 || bit_depth == 16)) || (rgb && bit_depth == 8))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(ErrorCode::format,
             path.string() + ": unsupported PNG layout (need 8/16-bit gray or 8-bit color)");
    }

    const size_t rowbytes = png_get_rowbytes(png, info);
    data.resize(rowbytes * height);
    rows.resize(height);
    for (png_uint_32 r = 0; r < height; ++r) rows[r] = data.data() + r * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Grid g(static_cast<Eigen::Index>(height), static_cast<Eigen::Index>(width));
    for (png_uint_32 r = 0; r < height; ++r) {
        const png_byte* row = data.data() + r * rowbytes;
        if (gray && bit_depth == 8) {
            for (png_uint_32 c = 0; c < width; ++c) g(r, c) = double(row[c]) / 255.0;
        } else if (gray) {
            // PNG stores 16-bit samples big-endian.
            for (png_uint_32 c = 0; c < width; ++c) {
                const unsigned v = (unsigned(row[2 * c]) << 8) | unsigned(row[2 * c + 1]);
                g(r, c) = double(v) / 65535.0;
            }
        } else {
            for (png_uint_32 c = 0; c < width; ++c) {
                const double red = row[3 * c];
                const double green = row[3 * c + 1];
                const double blue = row[3 * c + 2];
                g(r, c) = (0.299 * red + 0.587 * green + 0.114 * blue) / 255.0;
            }
        }
    }
    return g;
}

void save_png(const GridView& map, const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp) fail(ErrorCode::io, "cannot write " + path.string());

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        fail(ErrorCode::internal, "libpng allocation failure");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail(ErrorCode::io, "PNG write failed for " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, png_uint_32(map.cols()), png_uint_32(map.rows()), 8,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_byte> row(size_t(map.cols()));
    for (Eigen::Index r = 0; r < map.rows(); ++r) {
        for (Eigen::Index c = 0; c < map.cols(); ++c) row[size_t(c)] = quantize_byte(map(r, c));
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace

Grid load_frame(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) fail(ErrorCode::io, "no such file: " + path.string());
    const std::string ext = lower_ext(path);
    if (ext == ".png") return load_png(path);
    if (ext == ".pgm") return load_pgm(path);
    // Fall back on content sniffing for unknown extensions.
    std::ifstream probe(path, std::ios::binary);
    char magic[2] = {0, 0};
    probe.read(magic, 2);
    probe.close();
    if (magic[0] == 'P' && (magic[1] == '5' || magic[1] == '2')) return load_pgm(path);
    if (static_cast<unsigned char>(magic[0]) == 0x89 && magic[1] == 'P') return load_png(path);
    fail(ErrorCode::format, path.string() + ": unsupported image format");
}

void save_motion_map(const GridView& map, const std::filesystem::path& path) {
    check_dims(map.rows(), map.cols());
    if (lower_ext(path) == ".png")
        save_png(map, path);
    else
        save_pgm(map, path);
}

void save_grid_text(const GridView& g, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::io, "cannot write " + path.string());
    out << g.rows() << " " << g.cols() << "\n";
    char buf[64];
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
        for (Eigen::Index c = 0; c < g.cols(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", g(r, c));
            out << buf << (c + 1 == g.cols() ? "" : " ");
        }
        out << "\n";
    }
    if (!out) fail(ErrorCode::io, "write failed for " + path.string());
}

Grid load_grid_text(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io, "cannot open " + path.string());
    Eigen::Index rows = 0, cols = 0;
    if (!(in >> rows >> cols)) fail(ErrorCode::format, path.string() + ": bad grid header");
    check_dims(rows, cols);
    Grid g(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
            if (!(in >> g(r, c))) fail(ErrorCode::format, path.string() + ": truncated grid data");
    return g;
}

}  // namespace retina
