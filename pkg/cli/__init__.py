# Command-line front end: subcommands verify, scan, sandwich, sample, gof and plot-mk
