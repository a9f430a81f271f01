from medtext.cli import main

main()
