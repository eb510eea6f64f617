namespace Demo
{
    public class Point
    {
        private readonly int x;
        private readonly int y;

        public Point(int x, int y)
        {
            this.x = x;
            this.y = y;
        }

        public int GetX()
        {
            return x;
        }

        public int GetY()
        {
            return y;
        }

        public int DistanceSquared(Point other)
        {
            int dx = x - other.GetX();
            int dy = y - other.GetY();
            return dx * dx + dy * dy;
        }
    }
}
