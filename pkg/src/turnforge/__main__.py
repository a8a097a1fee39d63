from turnforge.cli import main

main()
