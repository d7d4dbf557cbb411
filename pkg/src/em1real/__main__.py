from em1real.cli import main

main()
