from nfacount.cli import main

main()
