# EV demand-response scheduler package
