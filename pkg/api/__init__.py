# API App - REST API endpoints and serializers
