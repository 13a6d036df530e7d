# modules package
# Funk geometry: polytopes, Holmes-Thompson ball volumes, asymptotics and Santalo points
