#include "cocoa/tiff.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace cocoa {

namespace {

// Tags used by the writer (ascending order is mandatory inside an IFD).
enum : std::uint16_t {
    kWidth = 256,
    kLength = 257,
    kBits = 258,
    kCompression = 259,
    kPhotometric = 262,
    kStripOffsets = 273,
    kSamplesPerPixel = 277,
    kRowsPerStrip = 278,
    kStripByteCounts = 279,
    kSampleFormat = 339,
};
enum : std::uint16_t { kTypeShort = 3, kTypeLong = 4 };

void put16(std::string& s, std::uint16_t v) { s.append(reinterpret_cast<char*>(&v), 2); }
void put32(std::string& s, std::uint32_t v) { s.append(reinterpret_cast<char*>(&v), 4); }

void entry(std::string& s, std::uint16_t tag, std::uint16_t type, std::uint32_t count,
           std::uint32_t value) {
    put16(s, tag);
    put16(s, type);
    put32(s, count);
    put32(s, value);
}

constexpr std::uint32_t kIfdBytes = 2 + 10 * 12 + 4;

}  // namespace

void write_tiff(const std::string& path, const Volume& v, TiffPixel pixel) {
    const int nz = v.shape.nz, ny = v.shape.ny, nx = v.shape.nx;
    if (nz < 1 || ny < 1 || nx < 1) throw DomainError("cannot write an empty TIFF");
    const std::size_t npix = static_cast<std::size_t>(ny) * nx;
    const std::uint32_t bps = pixel == TiffPixel::u16 ? 2 : 4;
    const std::uint32_t page_bytes = static_cast<std::uint32_t>(npix * bps);

    std::string out;
    out.reserve(8 + static_cast<std::size_t>(nz) * (page_bytes + kIfdBytes));
    out += "II";
    put16(out, 42);
    put32(out, 8 + page_bytes);  // first IFD sits right after page 0's data

    for (int z = 0; z < nz; ++z) {
        const std::uint32_t data_off = static_cast<std::uint32_t>(out.size());
        const double* p = v.data.data() + static_cast<std::size_t>(z) * npix;
        if (pixel == TiffPixel::u16) {
            for (std::size_t i = 0; i < npix; ++i) {
                const double r = std::round(p[i]);
                const std::uint16_t q =
                    static_cast<std::uint16_t>(std::clamp(r, 0.0, 65535.0));
                put16(out, q);
            }
        } else {
            for (std::size_t i = 0; i < npix; ++i) {
                const float f = static_cast<float>(p[i]);
                std::uint32_t bits;
                std::memcpy(&bits, &f, 4);
                put32(out, bits);
            }
        }
        put16(out, 10);  // entry count
        entry(out, kWidth, kTypeLong, 1, static_cast<std::uint32_t>(nx));
        entry(out, kLength, kTypeLong, 1, static_cast<std::uint32_t>(ny));
        entry(out, kBits, kTypeShort, 1, bps * 8);
        entry(out, kCompression, kTypeShort, 1, 1);
        entry(out, kPhotometric, kTypeShort, 1, 1);  // black is zero
        entry(out, kStripOffsets, kTypeLong, 1, data_off);
        entry(out, kSamplesPerPixel, kTypeShort, 1, 1);
        entry(out, kRowsPerStrip, kTypeLong, 1, static_cast<std::uint32_t>(ny));
        entry(out, kStripByteCounts, kTypeLong, 1, page_bytes);
        entry(out, kSampleFormat, kTypeShort, 1, pixel == TiffPixel::u16 ? 1 : 3);
        const bool last = z == nz - 1;
        put32(out, last ? 0 : static_cast<std::uint32_t>(out.size() + 4 + page_bytes));
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("write failed: " + path);
}

namespace {

struct Reader {
    std::string bytes;
    explicit Reader(const std::string& path) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw IoError("cannot open: " + path);
        bytes.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
    }
    std::uint16_t u16(std::size_t off) const {
        if (off + 2 > bytes.size()) throw IoError("truncated TIFF");
        std::uint16_t v;
        std::memcpy(&v, bytes.data() + off, 2);
        return v;
    }
    std::uint32_t u32(std::size_t off) const {
        if (off + 4 > bytes.size()) throw IoError("truncated TIFF");
        std::uint32_t v;
        std::memcpy(&v, bytes.data() + off, 4);
        return v;
    }
};

struct Field {
    std::uint16_t type = 0;
    std::uint32_t count = 0;
    std::uint32_t value_off = 0;  // offset of the value-or-offset cell
};

// Read the i-th element of a SHORT/LONG field, resolving inline storage.
std::uint32_t field_elem(const Reader& r, const Field& f, std::uint32_t i) {
    const std::uint32_t elem = f.type == kTypeShort ? 2 : 4;
    const std::uint32_t total = elem * f.count;
    const std::size_t base = total <= 4 ? f.value_off : r.u32(f.value_off);
    return f.type == kTypeShort ? r.u16(base + i * 2) : r.u32(base + i * 4);
}

}  // namespace

Volume read_tiff(const std::string& path, TiffInfo* info) {
    Reader r(path);
    if (r.bytes.size() < 8 || r.bytes[0] != 'I' || r.bytes[1] != 'I' || r.u16(2) != 42)
        throw IoError("not a little-endian TIFF: " + path);

    struct Page {
        std::uint32_t nx = 0, ny = 0, bits = 0, fmt = 1;
        std::vector<std::uint32_t> offsets, counts;
    };
    std::vector<Page> pages;
    std::uint32_t ifd = r.u32(4);
    while (ifd != 0) {
        const std::uint16_t n = r.u16(ifd);
        Page pg;
        Field offs{}, cnts{};
        std::uint32_t rows_per_strip = 0xffffffffu;
        for (std::uint16_t e = 0; e < n; ++e) {
            const std::size_t at = ifd + 2 + static_cast<std::size_t>(e) * 12;
            const std::uint16_t tag = r.u16(at);
            Field f{r.u16(at + 2), r.u32(at + 4), static_cast<std::uint32_t>(at + 8)};
            if (f.type != kTypeShort && f.type != kTypeLong) continue;
            switch (tag) {
                case kWidth: pg.nx = field_elem(r, f, 0); break;
                case kLength: pg.ny = field_elem(r, f, 0); break;
                case kBits: pg.bits = field_elem(r, f, 0); break;
                case kCompression:
                    if (field_elem(r, f, 0) != 1) throw IoError("compressed TIFF unsupported");
                    break;
                case kStripOffsets: offs = f; break;
                case kSamplesPerPixel:
                    if (field_elem(r, f, 0) != 1) throw IoError("multi-sample TIFF unsupported");
                    break;
                case kRowsPerStrip: rows_per_strip = field_elem(r, f, 0); break;
                case kStripByteCounts: cnts = f; break;
                case kSampleFormat: pg.fmt = field_elem(r, f, 0); break;
                default: break;
            }
        }
        (void)rows_per_strip;  // strip layout is reconstructed from offsets/counts
        if (pg.nx == 0 || pg.ny == 0 || offs.count == 0 || cnts.count != offs.count)
            throw IoError("TIFF page missing required fields");
        for (std::uint32_t i = 0; i < offs.count; ++i) {
            pg.offsets.push_back(field_elem(r, offs, i));
            pg.counts.push_back(field_elem(r, cnts, i));
        }
        if (pg.bits != 16 && pg.bits != 32) throw IoError("only 16- and 32-bit TIFFs supported");
        if (pg.bits == 16 && pg.fmt != 1) throw IoError("16-bit TIFF must be unsigned");
        if (pg.bits == 32 && pg.fmt != 3) throw IoError("32-bit TIFF must be IEEE float");
        if (!pages.empty() &&
            (pages[0].nx != pg.nx || pages[0].ny != pg.ny || pages[0].bits != pg.bits))
            throw IoError("TIFF pages disagree in shape or pixel type");
        pages.push_back(std::move(pg));
        ifd = r.u32(ifd + 2 + static_cast<std::size_t>(n) * 12);
    }
    if (pages.empty()) throw IoError("TIFF has no pages");

    const int nz = static_cast<int>(pages.size());
    const int ny = static_cast<int>(pages[0].ny), nx = static_cast<int>(pages[0].nx);
    Volume v({nz, ny, nx});
    const std::size_t npix = static_cast<std::size_t>(ny) * nx;
    const std::size_t bps = pages[0].bits / 8;
    for (int z = 0; z < nz; ++z) {
        const Page& pg = pages[z];
        std::size_t total = 0;
        for (std::uint32_t c : pg.counts) total += c;
        if (total != npix * bps) throw IoError("TIFF strip sizes disagree with page shape");
        std::size_t written = 0;
        for (std::size_t s = 0; s < pg.offsets.size(); ++s) {
            const std::size_t off = pg.offsets[s], cnt = pg.counts[s];
            if (off + cnt > r.bytes.size()) throw IoError("TIFF strip out of bounds");
            for (std::size_t b = 0; b + bps <= cnt; b += bps, ++written) {
                double val;
                if (pages[0].bits == 16) {
                    val = r.u16(off + b);
                } else {
                    const std::uint32_t bits = r.u32(off + b);
                    float f;
                    std::memcpy(&f, &bits, 4);
                    val = f;
                }
                v.data[static_cast<std::size_t>(z) * npix + written] = val;
            }
        }
    }
    if (info) {
        info->pages = nz;
        info->ny = ny;
        info->nx = nx;
        info->pixel = pages[0].bits == 16 ? TiffPixel::u16 : TiffPixel::f32;
    }
    return v;
}

}  // namespace cocoa
