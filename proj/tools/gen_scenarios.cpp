// Regenerates the bundled scenario files from the built-in definitions.
// Usage: gridrestore_gen_scenarios [out_dir]   (default: scenarios)

#include <filesystem>
#include <iostream>

#include "gridrestore/scenario.hpp"

int main(int argc, char** argv) {
    std::string dir = argc > 1 ? argv[1] : "scenarios";
    std::filesystem::create_directories(dir);
    for (const auto& name : gridrestore::builtin_scenario_names()) {
        auto sc = gridrestore::builtin_scenario(name);
        if (!sc) continue;
        std::string path = (std::filesystem::path(dir) / (name + ".json")).string();
        gridrestore::save_scenario(*sc, path);
        std::cout << path << "\n";
    }
    return 0;
}
