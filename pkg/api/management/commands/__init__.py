# Django management commands package