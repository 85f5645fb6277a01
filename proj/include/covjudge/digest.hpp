#pragma once

#include <memory>
#include <string>
#include <string_view>

namespace covjudge {

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// Incremental SHA-256 for digests over several inputs. Each part is
/// length-prefixed so ("ab","c") and ("a","bc") hash differently.
class Sha256 {
public:
    Sha256();
    ~Sha256();
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    Sha256& update(std::string_view part);
    std::string hex_digest();

private:
    struct State;
    std::unique_ptr<State> state_;
};

}  // namespace covjudge
