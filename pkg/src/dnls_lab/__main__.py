from dnls_lab import main

main()
