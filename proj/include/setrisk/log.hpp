#pragma once

// Minimal stderr logging. SETRISK_LOG=0 keeps warnings only, 1 (default) adds info, 2 debug.

#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <string>

namespace setrisk::log {

inline int level() {
    static const int lvl = [] {
        const char* e = std::getenv("SETRISK_LOG");
        return e ? std::atoi(e) : 1;
    }();
    return lvl;
}

inline void write(int lvl, const std::string& msg) {
    if (lvl > level()) return;
    static std::mutex mu;
    std::lock_guard lock(mu);
    std::fprintf(stderr, "[setrisk] %s\n", msg.c_str());
}

inline void info(const std::string& msg) { write(1, msg); }
inline void debug(const std::string& msg) { write(2, msg); }
inline void warn(const std::string& msg) { write(0, "warning: " + msg); }  // shown at every level

}  // namespace setrisk::log
