"""Command-line front end for the fredholm collocation solver."""
