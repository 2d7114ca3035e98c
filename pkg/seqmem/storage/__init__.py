# Storage package: config files and result formats
