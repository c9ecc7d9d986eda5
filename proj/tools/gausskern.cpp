#include <gausskern/commands.hpp>

int main(int argc, char** argv) { return gausskern::dispatch(argc, argv); }
