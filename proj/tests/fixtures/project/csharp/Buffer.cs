namespace Demo
{
    public class Buffer
    {
        private static readonly int Capacity = 16;
        private static readonly int Empty = -1;
        private readonly int[] data;
        private int size;

        public Buffer()
        {
            data = new int[Capacity];
            size = 0;
        }

        public bool Push(int value)
        {
            if (size >= Capacity)
            {
                return false;
            }
            data[size] = value;
            size = size + 1;
            return true;
        }

        public int Pop()
        {
            if (size == 0)
            {
                return Empty;
            }
            size = size - 1;
            return data[size];
        }

        public int GetSize()
        {
            return size;
        }
    }
}
