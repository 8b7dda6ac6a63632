#define DOCTEST_CONFIG_IMPLEMENT
#include "support/torch_doctest.hpp"

int main(int argc, char** argv) {
    // Fixed threading keeps every comparison in the suite deterministic.
    torch::set_num_threads(1);
    doctest::Context context(argc, argv);
    return context.run();
}
