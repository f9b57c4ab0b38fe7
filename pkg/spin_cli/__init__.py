# Command-line surface package
