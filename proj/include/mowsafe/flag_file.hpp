#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <system_error>

#include "mowsafe/errors.hpp"

namespace mowsafe {

// The detection bit as a two-byte text file ("0\n" or "1\n") that a second
// process can poll. Writes go to a sibling temp file which is then renamed
// over the target, so readers never observe a partial write.
inline void write_flag_file(const std::filesystem::path& path, int bit) {
    if (bit != 0 && bit != 1) throw ContractViolation("flag bit must be 0 or 1");
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.put(bit == 1 ? '1' : '0');
        out.put('\n');
        out.flush();
        if (!out) throw IoError("write to " + tmp.string() + " failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot replace " + path.string() + ": " + ec.message());
}

inline int read_flag_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open flag file " + path.string());
    const std::string content{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    if (content == "0\n") return 0;
    if (content == "1\n") return 1;
    throw ParseError("flag file " + path.string() + " must contain exactly \"0\\n\" or \"1\\n\"");
}

}  // namespace mowsafe
