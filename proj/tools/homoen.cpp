#include "homoenergetic/cli.hpp"

int main(int argc, char** argv)
{
    return homoenergetic::run_cli(argc, argv);
}
