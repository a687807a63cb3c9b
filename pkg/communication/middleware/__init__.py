# Middleware package