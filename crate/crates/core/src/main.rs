fn main() -> anyhow::Result<()> {
    scoopsim::cli::cli_main(std::env::args())
}
