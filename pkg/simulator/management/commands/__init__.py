# Django management commands package
