# Multi-body spin model package
