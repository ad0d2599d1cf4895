# Market products module
